#include "spd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace spd {

namespace {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() < 1 || m.rows() != m.cols()) {
    throw ValidationError(std::string(what) + ": expected a non-empty square matrix, got " +
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw ValidationError(std::string(what) + ": non-finite entry");
}

void require_positive_spectrum(const Vector& ascending) {
  const double lo = ascending(0);
  const double hi = ascending(ascending.size() - 1);
  if (!(hi > 0.0) || !(lo > kSpdRelativeTolerance * hi)) {
    throw NotPositiveDefinite("matrix is not positive definite: eigenvalue range [" +
                              std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

EigenDecomposition decompose(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

}  // namespace

// ---- SymMatrix -------------------------------------------------------------

SymMatrix::SymMatrix(const Matrix& m) {
  require_square(m, "SymMatrix");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double skew = linalg::asymmetry(m);
  if (skew > kSymmetryTolerance * scale) {
    throw ValidationError("SymMatrix: matrix is not symmetric (max asymmetry " +
                          std::to_string(skew) + ")");
  }
  m_ = linalg::symmetrized(m);
}

SymMatrix SymMatrix::zero(Eigen::Index dim) { return SymMatrix(Matrix::Zero(dim, dim)); }

SymMatrix SymMatrix::identity(Eigen::Index dim) { return SymMatrix(Matrix::Identity(dim, dim)); }

// ---- SpdMatrix -------------------------------------------------------------

SpdMatrix::SpdMatrix(const Matrix& m) : SpdMatrix(SymMatrix(m)) {}

SpdMatrix::SpdMatrix(const SymMatrix& s) : sym_(s), eig_(decompose(s.matrix())) {
  require_positive_spectrum(eig_.values);
}

SpdMatrix::SpdMatrix(SymMatrix sym, EigenDecomposition eig)
    : sym_(std::move(sym)), eig_(std::move(eig)) {
  require_positive_spectrum(eig_.values);
}

SpdMatrix SpdMatrix::identity(Eigen::Index dim) { return scaled_identity(dim, 1.0); }

SpdMatrix SpdMatrix::scaled_identity(Eigen::Index dim, double scale) {
  return SpdMatrix(Matrix(scale * Matrix::Identity(dim, dim)));
}

SpdMatrix SpdMatrix::from_spectrum(const Matrix& vectors, const Vector& values) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values(a) < values(b); });
  EigenDecomposition e{Vector(n), Matrix(vectors.rows(), n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    e.values(k) = values(order[static_cast<std::size_t>(k)]);
    e.vectors.col(k) = vectors.col(order[static_cast<std::size_t>(k)]);
  }
  if (!e.values.allFinite()) throw NumericalError("from_spectrum: non-finite eigenvalue");
  Matrix m = linalg::spectral_apply(e, [](double v) { return v; });
  return SpdMatrix(SymMatrix(m), std::move(e));
}

// ---- StiefelPoint ----------------------------------------------------------

StiefelPoint::StiefelPoint(const Matrix& u) : u_(u) {
  if (u.rows() < 1 || u.cols() < 1 || u.cols() > u.rows()) {
    throw ValidationError("StiefelPoint: expected n x m with 1 <= m <= n, got " +
                          std::to_string(u.rows()) + "x" + std::to_string(u.cols()));
  }
  const double err = orthonormality_error(u);
  if (!(err < kStiefelTolerance)) {
    throw ValidationError("StiefelPoint: columns are not orthonormal (||U^T U - I||_F = " +
                          std::to_string(err) + ")");
  }
}

StiefelPoint StiefelPoint::coordinate_selection(Eigen::Index n, Eigen::Index m) {
  return StiefelPoint(Matrix::Identity(n, m));
}

double orthonormality_error(const Matrix& u) {
  return (u.transpose() * u - Matrix::Identity(u.cols(), u.cols())).norm();
}

// ---- operations ------------------------------------------------------------

EigenDecomposition sym_eig(const SymMatrix& m) { return decompose(m.matrix()); }

SymMatrix spd_log(const SpdMatrix& x) {
  return SymMatrix(linalg::spectral_apply(x.eig(), [](double v) { return std::log(v); }));
}

SpdMatrix spd_exp(const SymMatrix& s) {
  const EigenDecomposition e = sym_eig(s);
  return SpdMatrix::from_spectrum(e.vectors, e.values.array().exp().matrix());
}

SpdMatrix spd_sqrt(const SpdMatrix& x) {
  const auto& e = x.eig();
  return SpdMatrix::from_spectrum(e.vectors, e.values.array().sqrt().matrix());
}

SpdMatrix spd_inv_sqrt(const SpdMatrix& x) {
  const auto& e = x.eig();
  return SpdMatrix::from_spectrum(e.vectors, e.values.array().sqrt().inverse().matrix());
}

double logdet(const SpdMatrix& x) { return linalg::logdet_chol(x.matrix()); }

SpdMatrix congruence(const SpdMatrix& x, const StiefelPoint& u) {
  if (u.rows() != x.dim()) {
    throw DimensionMismatch("congruence: U has " + std::to_string(u.rows()) +
                            " rows but X is " + std::to_string(x.dim()) + "-dimensional");
  }
  const Matrix& um = u.matrix();
  Matrix projected = um.transpose() * x.matrix() * um;
  return SpdMatrix(linalg::symmetrized(projected));
}

namespace linalg {

double logdet_chol(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("logdet: Cholesky factorization failed");
  }
  const auto diag = llt.matrixLLT().diagonal();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag(i) > 0.0)) throw NotPositiveDefinite("logdet: non-positive pivot");
    sum += std::log(diag(i));
  }
  return 2.0 * sum;
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double asymmetry(const Matrix& m) { return (m - m.transpose()).cwiseAbs().maxCoeff(); }

double relative_error(const Matrix& a, const Matrix& b) {
  const double denom = std::max(b.norm(), 1e-300);
  return (a - b).norm() / denom;
}

}  // namespace linalg

}  // namespace spd
