#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <vector>

#include "spd/kernels.hpp"

namespace spd::kernels {

namespace {

struct Projection {
  Matrix xu;       // X U
  Matrix a;        // U^T X U
  Matrix xu_ainv;  // X U (U^T X U)^{-1}, gradient only
  double logdet = 0.0;
  bool ok = false;
};

Projection project(const Matrix& x, const Matrix& u, bool want_grad) {
  Projection p;
  p.xu = x * u;
  p.a = linalg::symmetrized(u.transpose() * p.xu);
  Eigen::LLT<Matrix> llt(p.a);
  if (llt.info() != Eigen::Success) return p;
  p.logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  if (want_grad) p.xu_ainv = llt.solve(p.xu.transpose()).transpose();
  p.ok = std::isfinite(p.logdet);
  return p;
}

struct OwnerResult {
  double objective = 0.0;
  Matrix gradient;
  std::exception_ptr error;
};

Evaluation run(const ProblemView& problem, const Matrix& u, bool want_grad) {
  const auto n_samples = static_cast<std::ptrdiff_t>(problem.samples.size());
  const auto n_owners = static_cast<std::ptrdiff_t>(problem.owner_offsets.size()) - 1;

  std::vector<char> used(problem.samples.size(), 0);
  for (const PairTerm& t : problem.pairs) used[t.sample] = 1;

  std::vector<Projection> sample_proj(problem.samples.size());
  std::vector<Projection> mean_proj(problem.means.size());

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < n_samples; ++s) {
    if (used[static_cast<std::size_t>(s)]) {
      sample_proj[static_cast<std::size_t>(s)] =
          project(problem.samples[static_cast<std::size_t>(s)], u, want_grad);
    }
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n_owners; ++i) {
    mean_proj[static_cast<std::size_t>(i)] =
        project(problem.means[static_cast<std::size_t>(i)], u, want_grad);
  }

  std::vector<OwnerResult> owners(static_cast<std::size_t>(std::max<std::ptrdiff_t>(n_owners, 0)));

#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n_owners; ++i) {
    OwnerResult& out = owners[static_cast<std::size_t>(i)];
    try {
      const Projection& mp = mean_proj[static_cast<std::size_t>(i)];
      if (want_grad) out.gradient = Matrix::Zero(u.rows(), u.cols());
      for (std::size_t k = problem.owner_offsets[static_cast<std::size_t>(i)];
           k < problem.owner_offsets[static_cast<std::size_t>(i) + 1]; ++k) {
        const PairTerm& t = problem.pairs[k];
        const Projection& sp = sample_proj[t.sample];
        if (!sp.ok) throw SingularityError(t.owner, t.slot, "U^T X U");
        if (!mp.ok) throw SingularityError(t.owner, t.slot, "U^T M U");
        const Matrix mid = 0.5 * (sp.a + mp.a);
        Eigen::LLT<Matrix> llt_mid(mid);
        if (llt_mid.info() != Eigen::Success) throw SingularityError(t.owner, t.slot, "midpoint");
        const double ld_mid = 2.0 * llt_mid.matrixLLT().diagonal().array().log().sum();
        const double diff = t.original - (ld_mid - 0.5 * (sp.logdet + mp.logdet));
        out.objective += std::abs(diff);
        if (want_grad) {
          const Matrix sum_term = llt_mid.solve((sp.xu + mp.xu).transpose()).transpose();
          out.gradient -= sign_of(diff) * (sum_term - sp.xu_ainv - mp.xu_ainv);
        }
      }
    } catch (...) {
      out.error = std::current_exception();
    }
  }

  Evaluation ev{0.0, want_grad ? Matrix(Matrix::Zero(u.rows(), u.cols())) : Matrix()};
  for (const OwnerResult& r : owners) {
    if (r.error) std::rethrow_exception(r.error);
    ev.objective += r.objective;
    if (want_grad) ev.gradient += r.gradient;
  }
  return ev;
}

}  // namespace

double parallel_objective(const ProblemView& problem, const Matrix& u) {
  return run(problem, u, false).objective;
}

Evaluation parallel_evaluate(const ProblemView& problem, const Matrix& u) {
  return run(problem, u, true);
}

}  // namespace spd::kernels
