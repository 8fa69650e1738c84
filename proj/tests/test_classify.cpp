#include <map>

#include "doctest.h"
#include "oracle.hpp"
#include "spd/classify.hpp"

using namespace spd;

namespace {

std::vector<LabeledSample> clusters(int n, int per_class, const std::vector<Matrix>& centers, double noise,
                                    oracle::Rng& rng) {
  std::vector<LabeledSample> out;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const Matrix r = oracle::sqrtm(centers[c]);
    for (int i = 0; i < per_class; ++i) {
      const Matrix s = noise * oracle::sym(oracle::gaussian(n, n, rng));
      out.push_back({SpdMatrix(oracle::sym(r * oracle::expm(s) * r)), static_cast<Label>(c)});
    }
  }
  return out;
}

Eigen::MatrixXi counts(std::initializer_list<std::initializer_list<int>> rows) {
  Eigen::MatrixXi m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (int v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST_SUITE("classify") {
  TEST_CASE("MDM picks the nearer of I and 4I") {
    const std::vector<LabeledSample> s{{SpdMatrix::identity(3), 0}, {SpdMatrix::scaled_identity(3, 4.0), 1}};
    const MdmModel m = mdm_train(s);
    CHECK(mdm_predict(m, SpdMatrix::scaled_identity(3, 1.5)) == 0);
    CHECK(mdm_predict(m, SpdMatrix::scaled_identity(3, 3.0)) == 1);
    // 2I is equidistant under AIRM; ties go to the lower label.
    CHECK(mdm_predict(m, SpdMatrix::scaled_identity(3, 2.0)) == 0);
    CHECK_THROWS_AS(mdm_predict(m, SpdMatrix::identity(2)), DimensionMismatch);
    CHECK_THROWS_AS(mdm_train(std::vector<LabeledSample>{}), ValidationError);
  }

  TEST_CASE("MDM class means are the Karcher means of each class") {
    oracle::Rng rng(51);
    const auto s = clusters(4, 6, {oracle::random_spd(4, rng), oracle::random_spd(4, rng)}, 0.2, rng);
    const MdmModel m = mdm_train(s, MetricKind::LogDet);
    CHECK(m.metric == MetricKind::LogDet);
    REQUIRE(m.class_means.size() == 2);
    const std::vector<LabeledSample> two{s[0], s[1]};
    const MdmModel pair = mdm_train(two);
    CHECK(oracle::rel(pair.class_means.at(0).matrix(),
                      oracle::geometric_mean(s[0].matrix.matrix(), s[1].matrix.matrix())) < 1e-9);
  }

  TEST_CASE("MDM is invariant to sample order and label renaming") {
    oracle::Rng rng(52);
    auto s = clusters(3, 8, {oracle::random_spd(3, rng), oracle::random_spd(3, rng), oracle::random_spd(3, rng)},
                      0.4, rng);
    const MdmModel base = mdm_train(s);
    std::vector<LabeledSample> shuffled = s;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::vector<LabeledSample> renamed = s;
    const std::map<Label, Label> rename{{0, 7}, {1, 3}, {2, 11}};
    for (auto& x : renamed) x.label = rename.at(x.label);
    const MdmModel a = mdm_train(shuffled), b = mdm_train(renamed);
    for (int t = 0; t < 50; ++t) {
      const SpdMatrix q(oracle::random_spd(3, rng));
      const Label p = mdm_predict(base, q);
      CHECK(mdm_predict(a, q) == p);
      CHECK(mdm_predict(b, q) == rename.at(p));
    }
  }

  TEST_CASE("MDM predictions are invariant under congruence of everything") {
    oracle::Rng rng(53);
    const auto s = clusters(4, 6, {oracle::random_spd(4, rng), oracle::random_spd(4, rng)}, 0.5, rng);
    Matrix w = oracle::gaussian(4, 4, rng);
    w += 3.0 * Matrix::Identity(4, 4);
    auto moved = s;
    for (auto& x : moved) x.matrix = SpdMatrix(oracle::sym(w.transpose() * x.matrix.matrix() * w));
    const MdmModel a = mdm_train(s), b = mdm_train(moved);
    for (int t = 0; t < 30; ++t) {
      const Matrix q = oracle::random_spd(4, rng);
      CHECK(mdm_predict(a, SpdMatrix(q)) == mdm_predict(b, SpdMatrix(oracle::sym(w.transpose() * q * w))));
    }
  }

  TEST_CASE("tangent vectorization is an isometry") {
    oracle::Rng rng(54);
    for (int n = 1; n <= 8; ++n) {
      const Matrix s = oracle::sym(oracle::gaussian(n, n, rng));
      const Vector v = vectorize_tangent(SymMatrix(s));
      CHECK(v.size() == n * (n + 1) / 2);
      CHECK(v.norm() == doctest::Approx(s.norm()).epsilon(1e-14));
      CHECK(oracle::rel(unvectorize_tangent(v, n).matrix(), s) < 1e-15);
    }
    CHECK_THROWS_AS(unvectorize_tangent(Vector::Zero(5), 3), DimensionMismatch);
  }

  TEST_CASE("FGMDM defaults to C - 1 filters and keeps the input dimension") {
    oracle::Rng rng(55);
    const auto s = clusters(4, 10, {oracle::random_spd(4, rng), oracle::random_spd(4, rng)}, 0.3, rng);
    const FgmdmModel m = fgmdm_train(s);
    CHECK(m.retained() == 1);
    CHECK(m.filters.rows() == 10);
    CHECK(m.warnings.empty());
    CHECK(orthonormality_error(m.filters) < 1e-12);
    const SpdMatrix f = geodesic_filter(m, s[0].matrix);
    CHECK(f.dim() == 4);
    // Filtering twice changes nothing.
    CHECK(oracle::rel(geodesic_filter(m, f).matrix(), f.matrix()) < 1e-10);
    // The reference itself has zero tangent vector.
    CHECK(oracle::rel(geodesic_filter(m, m.reference).matrix(), m.reference.matrix()) < 1e-12);
  }

  TEST_CASE("FGMDM with every filter retained is MDM") {
    oracle::Rng rng(56);
    const auto s = clusters(3, 8, {oracle::random_spd(3, rng), oracle::random_spd(3, rng)}, 0.6, rng);
    FgmdmOptions opts;
    opts.n_filters = 6;
    const FgmdmModel f = fgmdm_train(s, opts);
    CHECK(f.is_identity_filter());
    CHECK(f.warnings.size() == 1);
    const MdmModel m = mdm_train(s);
    for (int t = 0; t < 50; ++t) {
      const SpdMatrix q(oracle::random_spd(3, rng));
      CHECK(geodesic_filter(f, q) == q);
      CHECK(fgmdm_predict(f, q) == mdm_predict(m, q));
    }
    opts.n_filters = 50;
    const FgmdmModel clamped = fgmdm_train(s, opts);
    CHECK(clamped.retained() == 6);
    CHECK(clamped.requested_filters == 50);
    CHECK(clamped.warnings.size() == 2);
  }

  TEST_CASE("FGMDM errors") {
    oracle::Rng rng(57);
    const auto one = clusters(3, 5, {oracle::random_spd(3, rng)}, 0.2, rng);
    CHECK_THROWS_AS(fgmdm_train(one), ConfigError);
    const auto s = clusters(3, 5, {oracle::random_spd(3, rng), oracle::random_spd(3, rng)}, 0.2, rng);
    FgmdmOptions opts;
    opts.n_filters = 0;
    CHECK_THROWS_AS(fgmdm_train(s, opts), ConfigError);
  }

  TEST_CASE("FGMDM separates classes that differ along one tangent direction") {
    oracle::Rng rng(58);
    const Matrix a = Matrix::Identity(4, 4);
    Matrix b = Matrix::Identity(4, 4);
    b(0, 0) = 3.0;
    const auto train = clusters(4, 20, {a, b}, 0.15, rng);
    const auto test = clusters(4, 20, {a, b}, 0.15, rng);
    const FgmdmModel m = fgmdm_train(train);
    int hits = 0;
    for (const auto& x : test) hits += fgmdm_predict(m, x.matrix) == x.label ? 1 : 0;
    CHECK(hits >= 38);
  }

  TEST_CASE("kappa examples") {
    const Kappa k = kappa(counts({{40, 10}, {10, 40}}));
    CHECK(k.observed == doctest::Approx(0.8));
    CHECK(k.chance == doctest::Approx(0.5));
    CHECK(k.value == doctest::Approx(0.6));
    CHECK(kappa(counts({{25, 25}, {25, 25}})).value == doctest::Approx(0.0));
    CHECK(kappa(counts({{30, 0, 0}, {0, 30, 0}, {0, 0, 30}})).value == doctest::Approx(1.0));
    // Independent hand computation: p_o = 0.7, p_e = (0.5*0.6 + 0.5*0.4) = 0.5.
    CHECK(kappa(counts({{40, 10}, {20, 30}})).value == doctest::Approx(0.4));
    const Kappa deg = kappa(counts({{10, 0}, {0, 0}}));
    CHECK(deg.degenerate);
    CHECK(deg.value == 0.0);
    CHECK_THROWS_AS(kappa(counts({{0, 0}, {0, 0}})), ValidationError);
    CHECK_THROWS_AS(kappa(Eigen::MatrixXi::Ones(2, 3)), ValidationError);
  }

  TEST_CASE("confusion report") {
    const std::vector<Label> truth{0, 0, 1, 1, 2, 2};
    const std::vector<Label> pred{0, 1, 1, 1, 2, 0};
    const ConfusionReport r = confusion_report(truth, pred);
    CHECK(r.labels == std::vector<Label>{0, 1, 2});
    CHECK(r.confusion == counts({{1, 1, 0}, {0, 2, 0}, {1, 0, 1}}));
    CHECK(r.accuracy == doctest::Approx(4.0 / 6.0));
    CHECK_THROWS_AS(confusion_report(truth, std::vector<Label>{0}), DimensionMismatch);
  }
}
