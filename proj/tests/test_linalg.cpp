#include "doctest.h"
#include "oracle.hpp"
#include "spd/linalg.hpp"

using namespace spd;

namespace {

Matrix m2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Matrix diag(std::initializer_list<double> v) {
  Vector d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i++) = x;
  return d.asDiagonal();
}

}  // namespace

TEST_SUITE("linalg") {
  TEST_CASE("symmetric construction absorbs drift and rejects asymmetry") {
    Matrix m = m2(2, 1, 1 + 1e-13, 2);
    SymMatrix s(m);
    CHECK(s(0, 1) == s(1, 0));
    CHECK_THROWS_AS(SymMatrix(m2(2, 1, 1.5, 2)), ValidationError);
    CHECK_THROWS_AS(SymMatrix(Matrix(2, 3)), ValidationError);
  }

  TEST_CASE("SPD validation") {
    CHECK_NOTHROW(SpdMatrix(m2(2, 1, 1, 2)));
    CHECK_THROWS_AS(SpdMatrix(m2(1, 2, 2, 1)), NotPositiveDefinite);
    CHECK_THROWS_AS(SpdMatrix(diag({1.0, 1e-14})), NotPositiveDefinite);
    CHECK_NOTHROW(SpdMatrix(diag({1.0, 1e-11})));
  }

  TEST_CASE("sym_eig examples") {
    const auto d = sym_eig(SymMatrix(diag({3, 1})));
    CHECK(d.values(0) == doctest::Approx(1.0));
    CHECK(d.values(1) == doctest::Approx(3.0));
    CHECK(std::abs(d.vectors(1, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(d.vectors(0, 1)) == doctest::Approx(1.0));

    const auto id = sym_eig(SymMatrix::identity(4));
    for (int i = 0; i < 4; ++i) CHECK(id.values(i) == doctest::Approx(1.0));

    // lambda^2 - 4 lambda + 3 = 0
    const auto e = sym_eig(SymMatrix(m2(2, 1, 1, 2)));
    CHECK(e.values(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e.values(1) == doctest::Approx(3.0).epsilon(1e-14));
  }

  TEST_CASE("sym_eig reconstructs and is orthonormal") {
    oracle::Rng rng(11);
    for (int n = 2; n <= 22; n += 4) {
      const Matrix x = oracle::random_spd(n, rng, 3.0);
      const auto e = sym_eig(SymMatrix(x));
      const Matrix back = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
      CHECK(oracle::rel(back, x) < 1e-9);
      CHECK((e.vectors.transpose() * e.vectors - Matrix::Identity(n, n)).norm() < 1e-9);
      for (Eigen::Index i = 1; i < n; ++i) CHECK(e.values(i - 1) <= e.values(i));
    }
  }

  TEST_CASE("log and exp examples") {
    CHECK(spd_log(SpdMatrix::identity(3)).matrix().norm() == 0.0);
    const Matrix l = spd_log(SpdMatrix(diag({std::exp(1.0), std::exp(2.0)}))).matrix();
    CHECK(oracle::rel(l, diag({1, 2})) < 1e-14);
    CHECK(oracle::rel(spd_exp(SymMatrix::zero(3)).matrix(), Matrix::Identity(3, 3)) == 0.0);
    CHECK(oracle::rel(spd_exp(SymMatrix(diag({1, 2}))).matrix(), diag({std::exp(1.0), std::exp(2.0)})) < 1e-14);

    // V diag(ln 1, ln 3) V^T with V = [1 -1; 1 1] / sqrt 2.
    const Matrix expected = 0.5 * std::log(3.0) * m2(1, 1, 1, 1);
    CHECK(oracle::rel(spd_log(SpdMatrix(m2(2, 1, 1, 2))).matrix(), expected) < 1e-13);
  }

  TEST_CASE("log/exp/sqrt agree with Schur-based matrix functions") {
    oracle::Rng rng(12);
    for (int n = 2; n <= 22; n += 5) {
      const Matrix x = oracle::random_spd(n, rng, 2.0);
      const SpdMatrix p(x);
      CHECK(oracle::rel(spd_log(p).matrix(), oracle::logm(x)) < 1e-9);
      CHECK(oracle::rel(spd_sqrt(p).matrix(), oracle::sqrtm(x)) < 1e-9);
      const Matrix s = oracle::sym(oracle::gaussian(n, n, rng));
      CHECK(oracle::rel(spd_exp(SymMatrix(s)).matrix(), oracle::expm(s)) < 1e-9);
    }
  }

  TEST_CASE("exp(log(X)) round trip up to condition 1e6") {
    oracle::Rng rng(13);
    for (int n = 2; n <= 22; ++n) {
      // spread ln(1e6) / 2 puts the condition number near 1e6
      const Matrix x = oracle::random_spd(n, rng, 0.5 * std::log(1e6));
      const SpdMatrix p(x);
      CHECK(oracle::rel(spd_exp(spd_log(p)).matrix(), x) < 1e-8);
    }
  }

  TEST_CASE("sqrt examples and round trip") {
    CHECK(spd_sqrt(SpdMatrix::identity(3)).matrix() == Matrix::Identity(3, 3));
    CHECK(oracle::rel(spd_sqrt(SpdMatrix(diag({4, 9}))).matrix(), diag({2, 3})) < 1e-15);
    oracle::Rng rng(14);
    for (int n = 2; n <= 22; n += 4) {
      const Matrix x = oracle::random_spd(n, rng, 2.0);
      const SpdMatrix p(x);
      const Matrix r = spd_sqrt(p).matrix();
      CHECK(oracle::rel(r * r, x) < 1e-8);
      CHECK(oracle::rel(spd_inv_sqrt(p).matrix(), r.inverse()) < 1e-8);
    }
  }

  TEST_CASE("logdet examples and eigenvalue cross-check") {
    CHECK(logdet(SpdMatrix::identity(4)) == 0.0);
    CHECK(logdet(SpdMatrix(diag({2, 2}))) == doctest::Approx(1.386294361119891).epsilon(1e-14));
    CHECK(logdet(SpdMatrix(m2(2, 1, 1, 2))) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
    oracle::Rng rng(15);
    for (int n = 2; n <= 22; n += 2) {
      const SpdMatrix p(oracle::random_spd(n, rng, 2.0));
      const double by_eig = p.eig().values.array().log().sum();
      const double ld = logdet(p);
      CHECK(std::abs(ld - by_eig) <= 1e-9 * std::max(1.0, std::abs(by_eig)));
      CHECK(std::abs(ld - oracle::logdet_lu(p.matrix())) <= 1e-9 * std::max(1.0, std::abs(ld)));
    }
  }

  TEST_CASE("congruence") {
    oracle::Rng rng(16);
    const SpdMatrix x(oracle::random_spd(5, rng));
    CHECK(congruence(x, StiefelPoint(Matrix::Identity(5, 5))) == x);
    const SpdMatrix sub = congruence(x, StiefelPoint::coordinate_selection(5, 3));
    CHECK(sub.matrix() == x.matrix().topLeftCorner(3, 3));
    CHECK_THROWS_AS(congruence(x, StiefelPoint::coordinate_selection(4, 2)), DimensionMismatch);
    for (int t = 0; t < 50; ++t) {
      const int n = 2 + t % 20;
      const int m = 1 + t % n;
      const SpdMatrix p(oracle::random_spd(n, rng, 3.0));
      const SpdMatrix c = congruence(p, StiefelPoint(oracle::orthonormal(n, m, rng)));
      CHECK(c.dim() == m);
      CHECK(c.eig().values(0) > 0.0);
    }
  }

  TEST_CASE("Stiefel validation") {
    oracle::Rng rng(17);
    const Matrix u = oracle::orthonormal(6, 3, rng);
    CHECK_NOTHROW(StiefelPoint{u});
    CHECK(orthonormality_error(u) < 1e-12);
    CHECK_THROWS_AS(StiefelPoint(Matrix(2.0 * u)), ValidationError);
    CHECK_THROWS_AS(StiefelPoint(oracle::gaussian(3, 4, rng)), ValidationError);
  }
}
