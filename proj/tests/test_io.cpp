#include "doctest.h"
#include "oracle.hpp"
#include "scratch.hpp"
#include "spd/io.hpp"
#include "spd/synth.hpp"

using namespace spd;
using io::json;

TEST_SUITE("io") {
  TEST_CASE("doubles survive text round trips exactly") {
    oracle::Rng rng(71);
    const Matrix m = oracle::gaussian(5, 3, rng) * 1e5;
    CHECK(io::parse_matrix_csv(io::format_matrix_csv(m)) == m);
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) CHECK(std::stod(io::format_double(v)) == v);
    CHECK(io::matrix_from_json(json::parse(io::matrix_to_json(m).dump())) == m);
  }

  TEST_CASE("CSV parsing") {
    const Matrix m = io::parse_matrix_csv("1,2\n\n3, 4\n");
    CHECK(m.rows() == 2);
    CHECK(m(1, 1) == 4.0);
    CHECK_THROWS_AS(io::parse_matrix_csv("1,2\n3\n"), DataError);
    CHECK_THROWS_AS(io::parse_matrix_csv("1,x\n"), DataError);
    CHECK_THROWS_AS(io::parse_matrix_csv(""), DataError);
    try {
      (void)io::parse_matrix_csv("1,2\n3,4\n5\n", "m.csv");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("m.csv:3") != std::string::npos);
    }
    CHECK_THROWS_AS(io::matrix_from_json(json::parse("[[1,2],[3]]")), DataError);
  }

  TEST_CASE("SPD dataset round trip") {
    const auto dir = scratch_dir("io-spd");
    SyntheticSpec spec;
    spec.per_class = 4;
    spec.dim = 5;
    spec.block_dim = 2;
    spec.structure = SynthStructure::BlockDiscriminative;
    const auto ds = synthesize(spec);
    const auto manifest = io::write_spd_dataset(dir, "train", ds.train, json{{"seed", 0}});
    CHECK(manifest == dir / "train.json");
    const auto back = io::read_spd_dataset(manifest);
    REQUIRE(back.samples.size() == ds.train.size());
    for (std::size_t i = 0; i < back.samples.size(); ++i) {
      CHECK(back.samples[i].label == ds.train[i].label);
      CHECK(back.samples[i].matrix == ds.train[i].matrix);
    }
    CHECK(back.config.at("seed") == 0);
    const json j = io::read_json(manifest);
    CHECK(j.at("format_version") == io::kFormatVersion);
    CHECK(j.at("kind") == "spd-dataset");
  }

  TEST_CASE("dataset schema errors") {
    const auto dir = scratch_dir("io-bad");
    io::write_text(dir / "wrong.json", R"({"format_version":"spd-dplm/1","kind":"dplm-model"})");
    CHECK_THROWS_AS(io::read_spd_dataset(dir / "wrong.json"), DataError);
    io::write_text(dir / "version.json", R"({"format_version":"other/9","kind":"spd-dataset","samples":[]})");
    CHECK_THROWS_AS(io::read_spd_dataset(dir / "version.json"), DataError);
    io::write_text(dir / "broken.json", "{");
    CHECK_THROWS_AS(io::read_json(dir / "broken.json"), DataError);
    CHECK_THROWS_AS(io::read_json(dir / "missing.json"), DataError);
    io::write_text(dir / "x/0.csv", "1,2\n2,1\n");
    io::write_text(dir / "notspd.json",
                   R"({"format_version":"spd-dplm/1","kind":"spd-dataset","dim":2,
                       "samples":[{"path":"x/0.csv","label":0}]})");
    CHECK_THROWS_AS(io::read_spd_dataset(dir / "notspd.json"), DataError);
  }

  TEST_CASE("trial dataset round trip") {
    const auto dir = scratch_dir("io-trials");
    TrialSynthSpec spec;
    spec.per_class = 2;
    spec.channels = 3;
    spec.duration = 6.0;
    const auto trials = synthesize_trials(spec);
    const auto back = io::read_trial_dataset(io::write_trial_dataset(dir, "t", trials, json::object()));
    REQUIRE(back.trials.size() == trials.size());
    for (std::size_t i = 0; i < trials.size(); ++i) {
      CHECK(back.trials[i].data == trials[i].data);
      CHECK(back.trials[i].label == trials[i].label);
      CHECK(back.trials[i].sample_rate == trials[i].sample_rate);
    }
  }

  TEST_CASE("config and model round trips") {
    DplmConfig c;
    c.target_dim = 3;
    c.k_neighbors = 7;
    c.supervised = false;
    c.neighbor_metric = MetricKind::Airm;
    c.grad_norm_tol = 1e-9;
    c.init = InitKind::RandomOrthonormal;
    const DplmConfig back = io::dplm_config_from_json(io::to_json(c));
    CHECK(back.target_dim == 3);
    CHECK(back.k_neighbors == 7);
    CHECK_FALSE(back.supervised);
    CHECK(back.neighbor_metric == MetricKind::Airm);
    CHECK(back.grad_norm_tol == 1e-9);
    CHECK(back.init == InitKind::RandomOrthonormal);

    oracle::Rng rng(72);
    const DplmModel model{StiefelPoint(oracle::orthonormal(6, 2, rng)), 5, {}};
    const json mj = json::parse(io::dplm_model_to_json(model, io::to_json(c)).dump());
    const DplmModel m2 = io::dplm_model_from_json(mj);
    CHECK(m2.projection.matrix() == model.projection.matrix());
    CHECK(m2.k_neighbors == 5);
    CHECK_THROWS_AS(io::dplm_model_from_json(json{{"format_version", "spd-dplm/1"}, {"kind", "classifier"}}),
                    DataError);

    const PreprocSpec p{3.1, 5.2, 8.0, 30.0};
    const PreprocSpec pb = io::preproc_from_json(io::to_json(p));
    CHECK(pb.window_start == 3.1);
    CHECK(pb.band_high == 30.0);
  }

  TEST_CASE("classifier round trips predict identically") {
    oracle::Rng rng(73);
    std::vector<LabeledSample> s;
    for (int i = 0; i < 12; ++i) s.push_back({SpdMatrix(oracle::random_spd(3, rng)), i % 3});
    const MdmModel mdm = mdm_train(s, MetricKind::LogDet);
    const MdmModel mdm2 = io::mdm_from_json(json::parse(io::mdm_to_json(mdm).dump()));
    const FgmdmModel fg = fgmdm_train(s);
    const FgmdmModel fg2 = io::fgmdm_from_json(json::parse(io::fgmdm_to_json(fg).dump()));
    CHECK(mdm2.metric == MetricKind::LogDet);
    CHECK(fg2.retained() == fg.retained());
    for (int t = 0; t < 30; ++t) {
      const SpdMatrix q(oracle::random_spd(3, rng));
      CHECK(mdm_predict(mdm2, q) == mdm_predict(mdm, q));
      CHECK(fgmdm_predict(fg2, q) == fgmdm_predict(fg, q));
    }
  }
}
