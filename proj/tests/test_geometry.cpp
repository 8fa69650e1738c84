#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "oracle.hpp"
#include "spd/geometry.hpp"

using namespace spd;

namespace {

SpdMatrix scaled(Eigen::Index n, double s) { return SpdMatrix::scaled_identity(n, s); }

double karcher_cost(const SpdMatrix& p, std::span<const SpdMatrix> pts) {
  double c = 0.0;
  for (const auto& x : pts) c += oracle::airm_sq(p.matrix(), x.matrix());
  return c;
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("metric parsing") {
    CHECK(parse_metric("airm") == MetricKind::Airm);
    CHECK(parse_metric("LogDet") == MetricKind::LogDet);
    CHECK(parse_metric("jbld") == MetricKind::LogDet);
    CHECK_THROWS_AS(parse_metric("euclid"), ConfigError);
    CHECK(to_string(MetricKind::Airm) == "airm");
  }

  TEST_CASE("AIRM examples") {
    oracle::Rng rng(21);
    const SpdMatrix x(oracle::random_spd(4, rng));
    CHECK(airm_sq(x, x) == 0.0);
    CHECK(airm_sq(scaled(2, 2.0), SpdMatrix::identity(2)) ==
          doctest::Approx(2.0 * std::log(2.0) * std::log(2.0)).epsilon(1e-14));
    CHECK(airm_sq(scaled(2, 2.0), SpdMatrix::identity(2)) == doctest::Approx(0.960906).epsilon(1e-6));
    for (int t = 0; t < 50; ++t) {
      const int n = 2 + t % 21;
      const SpdMatrix a(oracle::random_spd(n, rng, 2.0)), b(oracle::random_spd(n, rng, 2.0));
      const double ab = airm_sq(a, b);
      CHECK(ab == doctest::Approx(oracle::airm_sq(a.matrix(), b.matrix())).epsilon(1e-9));
      CHECK(ab == doctest::Approx(airm_sq(b, a)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(airm_sq(scaled(2, 1.0), scaled(3, 1.0)), DimensionMismatch);
  }

  TEST_CASE("AIRM congruence invariance") {
    oracle::Rng rng(22);
    for (int t = 0; t < 30; ++t) {
      const int n = 2 + t % 10;
      const Matrix x = oracle::random_spd(n, rng), y = oracle::random_spd(n, rng);
      Matrix m = oracle::gaussian(n, n, rng);
      m += 3.0 * Matrix::Identity(n, n);  // comfortably invertible
      const double before = airm_sq(SpdMatrix(x), SpdMatrix(y));
      const double after =
          airm_sq(SpdMatrix(oracle::sym(m.transpose() * x * m)), SpdMatrix(oracle::sym(m.transpose() * y * m)));
      CHECK(std::abs(after - before) <= 1e-7 * std::max(1.0, before));
    }
  }

  TEST_CASE("JBLD and LogDet metric examples") {
    CHECK(jbld(SpdMatrix::identity(3), SpdMatrix::identity(3)) == 0.0);
    const double j = jbld(scaled(2, 2.0), SpdMatrix::identity(2));
    CHECK(j == doctest::Approx(std::log(2.25) - 0.5 * std::log(4.0)).epsilon(1e-14));
    CHECK(j == doctest::Approx(0.117783).epsilon(1e-5));
    CHECK(logdet_metric(scaled(2, 2.0), SpdMatrix::identity(2)) == doctest::Approx(0.343195).epsilon(1e-5));
    oracle::Rng rng(23);
    const SpdMatrix x(oracle::random_spd(5, rng));
    CHECK(logdet_metric(x, x) == 0.0);
    for (int t = 0; t < 50; ++t) {
      const int n = 2 + t % 21;
      const SpdMatrix a(oracle::random_spd(n, rng)), b(oracle::random_spd(n, rng));
      CHECK(jbld(a, b) == doctest::Approx(oracle::jbld(a.matrix(), b.matrix())).epsilon(1e-9));
      CHECK(jbld(a, b) == jbld(b, a));
      CHECK(jbld(a, b) >= 0.0);
    }
  }

  TEST_CASE("JBLD vanishes only for equal inputs") {
    oracle::Rng rng(24);
    const Matrix x = oracle::random_spd(4, rng);
    Matrix y = x;
    y(0, 0) += 1e-6;
    CHECK(jbld(SpdMatrix(x), SpdMatrix(y)) > 0.0);
    CHECK(jbld(SpdMatrix(x), SpdMatrix(x)) == 0.0);
  }

  TEST_CASE("Karcher mean of identical points returns the point exactly") {
    oracle::Rng rng(25);
    const SpdMatrix a(oracle::random_spd(5, rng));
    const std::vector<SpdMatrix> pts{a, a, a};
    const KarcherResult r = karcher_mean_detailed(pts);
    CHECK(r.mean == a);
    CHECK(r.iterations == 0);
  }

  TEST_CASE("Karcher mean of I and 4I is 2I") {
    const std::vector<SpdMatrix> pts{SpdMatrix::identity(2), scaled(2, 4.0)};
    CHECK(oracle::rel(karcher_mean(pts).matrix(), 2.0 * Matrix::Identity(2, 2)) < 1e-12);
  }

  TEST_CASE("Karcher mean satisfies the first-order condition and is a local minimum") {
    oracle::Rng rng(26);
    std::vector<SpdMatrix> pts;
    for (int i = 0; i < 7; ++i) pts.emplace_back(oracle::random_spd(4, rng, 1.5));
    const KarcherConfig cfg;
    const SpdMatrix p = karcher_mean(pts, cfg);

    const Matrix w = oracle::sqrtm(p.matrix()).inverse();
    Matrix sum = Matrix::Zero(4, 4);
    for (const auto& x : pts) sum += oracle::logm(oracle::sym(w * x.matrix() * w));
    CHECK((sum / 7.0).norm() < 10.0 * cfg.tolerance);

    const double best = karcher_cost(p, pts);
    for (int t = 0; t < 100; ++t) {
      const Matrix s = 1e-3 * oracle::sym(oracle::gaussian(4, 4, rng));
      const SpdMatrix q = tangent_exp(p, SymMatrix(s));
      CHECK(karcher_cost(q, pts) >= best);
    }
  }

  TEST_CASE("Karcher mean is permutation invariant bit for bit") {
    oracle::Rng rng(27);
    std::vector<SpdMatrix> pts;
    for (int i = 0; i < 6; ++i) pts.emplace_back(oracle::random_spd(5, rng));
    const SpdMatrix ref = karcher_mean(pts);
    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), 0);
    for (int t = 0; t < 10; ++t) {
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<SpdMatrix> shuffled;
      for (auto i : order) shuffled.push_back(pts[i]);
      CHECK(karcher_mean(shuffled) == ref);
    }
  }

  TEST_CASE("Karcher mean errors") {
    CHECK_THROWS_AS(karcher_mean(std::vector<SpdMatrix>{}), ValidationError);
    CHECK_THROWS_AS(karcher_mean(std::vector<SpdMatrix>{scaled(2, 1.0), scaled(3, 1.0)}), DimensionMismatch);
    oracle::Rng rng(28);
    std::vector<SpdMatrix> pts;
    for (int i = 0; i < 5; ++i) pts.emplace_back(oracle::random_spd(6, rng, 3.0));
    KarcherConfig tight;
    tight.max_iterations = 1;
    tight.tolerance = 1e-15;
    try {
      (void)karcher_mean(pts, tight);
      FAIL("expected non-convergence");
    } catch (const KarcherNotConverged& e) {
      CHECK(e.residual() > tight.tolerance);
      CHECK(e.iterations() == 1);
      CHECK(e.last_iterate().dim() == 6);
    }
    KarcherConfig bad;
    bad.step_size = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("tangent maps") {
    oracle::Rng rng(29);
    const SpdMatrix b(oracle::random_spd(5, rng)), x(oracle::random_spd(5, rng));
    CHECK(tangent_log(b, b).matrix().norm() < 1e-12);
    CHECK(oracle::rel(tangent_log(SpdMatrix::identity(5), x).matrix(), oracle::logm(x.matrix())) < 1e-10);
    for (int t = 0; t < 20; ++t) {
      const int n = 2 + t;
      const SpdMatrix base(oracle::random_spd(n, rng)), y(oracle::random_spd(n, rng));
      CHECK(oracle::rel(tangent_exp(base, tangent_log(base, y)).matrix(), y.matrix()) < 1e-8);
    }
  }
}
