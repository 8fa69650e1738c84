#pragma once

// Dense symmetric matrix types and eigendecomposition-backed matrix functions.

#include <Eigen/Dense>

#include "spd/error.hpp"

namespace spd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSymmetryTolerance = 1e-10;
inline constexpr double kSpdRelativeTolerance = 1e-12;
inline constexpr double kStiefelTolerance = 1e-8;

/// Square symmetric matrix. Input within tolerance of symmetric is replaced by
/// (M + M^T) / 2; anything further off is rejected.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& m);

  static SymMatrix zero(Eigen::Index dim);
  static SymMatrix identity(Eigen::Index dim);

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  friend bool operator==(const SymMatrix& a, const SymMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  Matrix m_;
};

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
struct EigenDecomposition {
  Vector values;
  Matrix vectors;
};

/// Symmetric positive definite matrix; the manifold point type. The
/// eigendecomposition computed for validation is kept and reused by the
/// matrix functions below.
class SpdMatrix {
 public:
  explicit SpdMatrix(const Matrix& m);
  explicit SpdMatrix(const SymMatrix& s);

  static SpdMatrix identity(Eigen::Index dim);
  static SpdMatrix scaled_identity(Eigen::Index dim, double scale);
  /// Builds V diag(values) V^T; values must be positive, any order.
  static SpdMatrix from_spectrum(const Matrix& vectors, const Vector& values);

  Eigen::Index dim() const { return sym_.dim(); }
  const Matrix& matrix() const { return sym_.matrix(); }
  const SymMatrix& sym() const { return sym_; }
  const EigenDecomposition& eig() const { return eig_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return sym_(i, j); }

  friend bool operator==(const SpdMatrix& a, const SpdMatrix& b) { return a.sym_ == b.sym_; }

 private:
  SpdMatrix(SymMatrix sym, EigenDecomposition eig);

  SymMatrix sym_;
  EigenDecomposition eig_;
};

/// n x m matrix with orthonormal columns (a point on the Stiefel manifold).
class StiefelPoint {
 public:
  explicit StiefelPoint(const Matrix& u);

  /// First m columns of I_n.
  static StiefelPoint coordinate_selection(Eigen::Index n, Eigen::Index m);

  Eigen::Index rows() const { return u_.rows(); }
  Eigen::Index cols() const { return u_.cols(); }
  const Matrix& matrix() const { return u_; }

 private:
  Matrix u_;
};

/// ||U^T U - I||_F.
double orthonormality_error(const Matrix& u);

EigenDecomposition sym_eig(const SymMatrix& m);

SymMatrix spd_log(const SpdMatrix& x);
SpdMatrix spd_exp(const SymMatrix& s);
SpdMatrix spd_sqrt(const SpdMatrix& x);
SpdMatrix spd_inv_sqrt(const SpdMatrix& x);

/// Log-determinant through a Cholesky factorization.
double logdet(const SpdMatrix& x);

/// U^T X U.
SpdMatrix congruence(const SpdMatrix& x, const StiefelPoint& u);

namespace linalg {

/// Raw Cholesky log-determinant for hot loops; throws NotPositiveDefinite.
double logdet_chol(const Matrix& m);

Matrix symmetrized(const Matrix& m);

/// Largest |m(i,j) - m(j,i)|.
double asymmetry(const Matrix& m);

/// V diag(f(lambda)) V^T.
template <typename F>
Matrix spectral_apply(const EigenDecomposition& e, F f) {
  Vector mapped = e.values.unaryExpr(f);
  Matrix out = e.vectors * mapped.asDiagonal() * e.vectors.transpose();
  return symmetrized(out);
}

/// Relative Frobenius distance ||a - b|| / max(||b||, tiny).
double relative_error(const Matrix& a, const Matrix& b);

}  // namespace linalg

}  // namespace spd
