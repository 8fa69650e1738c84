#include "spd/kernels.hpp"

#include <cmath>

namespace spd::kernels {

SingularityError::SingularityError(std::size_t owner, std::size_t slot, const std::string& what)
    : NumericalError("singular projected matrix at pair (owner " + std::to_string(owner) +
                     ", neighbor " + std::to_string(slot) + "): " + what),
      owner_(owner),
      slot_(slot) {}

double jbld_raw(const Matrix& a, const Matrix& b, double logdet_a, double logdet_b) {
  const Matrix mid = 0.5 * (a + b);
  return linalg::logdet_chol(mid) - 0.5 * (logdet_a + logdet_b);
}

namespace {

struct PairResult {
  double abs_diff;
  Matrix term;  // sgn(diff) * dJ/dU, only when requested
};

PairResult eval_pair(const ProblemView& p, const PairTerm& t, const Matrix& u, bool want_grad) {
  const Matrix& x = p.samples[t.sample];
  const Matrix& m = p.means[t.owner];
  const Matrix xu = x * u;
  const Matrix mu = m * u;
  const Matrix a = linalg::symmetrized(u.transpose() * xu);
  const Matrix b = linalg::symmetrized(u.transpose() * mu);
  const Matrix mid = 0.5 * (a + b);

  Eigen::LLT<Matrix> llt_a(a), llt_b(b), llt_mid(mid);
  if (llt_a.info() != Eigen::Success) throw SingularityError(t.owner, t.slot, "U^T X U");
  if (llt_b.info() != Eigen::Success) throw SingularityError(t.owner, t.slot, "U^T M U");
  if (llt_mid.info() != Eigen::Success) throw SingularityError(t.owner, t.slot, "midpoint");

  auto ld = [](const Eigen::LLT<Matrix>& f) {
    return 2.0 * f.matrixLLT().diagonal().array().log().sum();
  };
  const double projected = ld(llt_mid) - 0.5 * (ld(llt_a) + ld(llt_b));
  const double diff = t.original - projected;

  PairResult r{std::abs(diff), Matrix()};
  if (want_grad) {
    const Matrix sum_term = llt_mid.solve((xu + mu).transpose()).transpose();
    const Matrix x_term = llt_a.solve(xu.transpose()).transpose();
    const Matrix m_term = llt_b.solve(mu.transpose()).transpose();
    r.term = -sign_of(diff) * (sum_term - x_term - m_term);
  }
  return r;
}

}  // namespace

double serial_objective(const ProblemView& problem, const Matrix& u) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < problem.owner_offsets.size(); ++i) {
    double owner_sum = 0.0;
    for (std::size_t k = problem.owner_offsets[i]; k < problem.owner_offsets[i + 1]; ++k) {
      owner_sum += eval_pair(problem, problem.pairs[k], u, false).abs_diff;
    }
    total += owner_sum;
  }
  return total;
}

Evaluation serial_evaluate(const ProblemView& problem, const Matrix& u) {
  Evaluation ev{0.0, Matrix::Zero(u.rows(), u.cols())};
  for (std::size_t i = 0; i + 1 < problem.owner_offsets.size(); ++i) {
    double owner_sum = 0.0;
    Matrix owner_grad = Matrix::Zero(u.rows(), u.cols());
    for (std::size_t k = problem.owner_offsets[i]; k < problem.owner_offsets[i + 1]; ++k) {
      PairResult r = eval_pair(problem, problem.pairs[k], u, true);
      owner_sum += r.abs_diff;
      owner_grad += r.term;
    }
    ev.objective += owner_sum;
    ev.gradient += owner_grad;
  }
  return ev;
}

}  // namespace spd::kernels
