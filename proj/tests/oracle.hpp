#pragma once

// Reference computations for the tests. Nothing here calls into the library's
// numerical code: matrix functions come from Eigen's Schur-based
// MatrixFunctions module, determinants from LU.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

inline Mat gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  }
  return m;
}

inline Mat orthonormal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::HouseholderQR<Mat> qr(gaussian(rows, cols, rng));
  return qr.householderQ() * Mat::Identity(rows, cols);
}

/// Q diag(exp(u)) Q^T with u uniform in [-spread, spread].
inline Mat random_spd(Eigen::Index n, Rng& rng, double spread = 1.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  const Mat q = orthonormal(n, n, rng);
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = std::exp(u(rng));
  const Mat x = q * d.asDiagonal() * q.transpose();
  return 0.5 * (x + x.transpose());
}

inline Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

inline double logdet_lu(const Mat& m) { return std::log(m.partialPivLu().determinant()); }

inline double jbld(const Mat& x, const Mat& y) {
  return logdet_lu(0.5 * (x + y)) - 0.5 * (logdet_lu(x) + logdet_lu(y));
}

/// Sum of squared logs of the generalized eigenvalues of (X, Y).
inline double airm_sq(const Mat& x, const Mat& y) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(x, y);
  return ges.eigenvalues().array().log().square().sum();
}

inline Mat sqrtm(const Mat& x) { return sym(Mat(x.sqrt())); }
inline Mat logm(const Mat& x) { return sym(Mat(x.log())); }
inline Mat expm(const Mat& s) { return sym(Mat(s.exp())); }

/// X^{1/2} (X^{-1/2} Y X^{-1/2})^{1/2} X^{1/2}.
inline Mat geometric_mean(const Mat& x, const Mat& y) {
  const Mat xs = sqrtm(x);
  const Mat xis = xs.inverse();
  return sym(xs * sqrtm(sym(xis * y * xis)) * xs);
}

inline double rel(const Mat& a, const Mat& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

/// Straight from the definition: sum_i sum_j |J(X_ij, M_i) - J(U^T X_ij U, U^T M_i U)|.
struct Term {
  Mat x;
  Mat mean;
};

inline double objective(std::span<const Term> terms, const Mat& u) {
  double h = 0.0;
  for (const Term& t : terms) {
    h += std::abs(jbld(t.x, t.mean) -
                  jbld(u.transpose() * t.x * u, u.transpose() * t.mean * u));
  }
  return h;
}

/// Smallest |J - J_projected| over the terms (how close U sits to a kink).
inline double min_gap(std::span<const Term> terms, const Mat& u) {
  double g = INFINITY;
  for (const Term& t : terms) {
    g = std::min(g, std::abs(jbld(t.x, t.mean) -
                             jbld(u.transpose() * t.x * u, u.transpose() * t.mean * u)));
  }
  return g;
}

template <class F>
Mat central_difference(F&& f, const Mat& u, double h = 1e-6) {
  Mat g(u.rows(), u.cols());
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      Mat up = u, dn = u;
      up(i, j) += h;
      dn(i, j) -= h;
      g(i, j) = (f(up) - f(dn)) / (2.0 * h);
    }
  }
  return g;
}

}  // namespace oracle
