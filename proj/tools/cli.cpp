#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spd/classify.hpp"
#include "spd/dplm.hpp"
#include "spd/io.hpp"
#include "spd/pipeline.hpp"
#include "spd/synth.hpp"

namespace spd::cli {

namespace {

using io::json;
namespace fs = std::filesystem;

/// Bad flag combinations found after parsing.
class UsageError : public Error {
 public:
  using Error::Error;
};

void require(const CLI::Option* opt) {
  if (opt->count() == 0) throw UsageError(opt->get_name() + " is required");
}

std::string scalar_text(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  throw ConfigError("config key '" + key + "' must hold a scalar or a list of scalars");
}

/// Fills options not given on the command line from the JSON file named by
/// --config. Keys are option names without dashes; snake_case is accepted.
void apply_config(CLI::App* sub, const std::string& path) {
  const json cfg = io::read_json(path);
  if (!cfg.is_object()) throw ConfigError(path + ": config must be a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    if (name == "config") throw ConfigError(path + ": nested config files are not supported");
    CLI::Option* opt = sub->get_option_no_throw("--" + name);
    if (opt == nullptr) {
      throw ConfigError(path + ": unknown key '" + key + "' for '" + sub->get_name() + "'");
    }
    if (opt->count() > 0) continue;
    if (value.is_array()) {
      for (const json& item : value) {
        if (item.is_array() && item.size() == 2) {
          opt->add_result(scalar_text(item[0], key) + ":" + scalar_text(item[1], key));
        } else {
          opt->add_result(scalar_text(item, key));
        }
      }
    } else {
      opt->add_result(scalar_text(value, key));
    }
    opt->run_callback();
  }
}

void add_karcher(CLI::App* sub, KarcherConfig& k) {
  sub->add_option("--karcher-max-iterations", k.max_iterations, "Karcher mean iteration cap")
      ->capture_default_str();
  sub->add_option("--karcher-tol", k.tolerance, "Karcher mean gradient-norm tolerance")
      ->capture_default_str();
  sub->add_option("--karcher-step", k.step_size, "Karcher mean step size")->capture_default_str();
}

json with_header(std::string_view kind, json config) {
  json j;
  j["format_version"] = io::kFormatVersion;
  j["kind"] = kind;
  j["config"] = std::move(config);
  return j;
}

std::vector<Label> labels_of(std::span<const LabeledSample> s) {
  std::vector<Label> out;
  out.reserve(s.size());
  for (const auto& x : s) out.push_back(x.label);
  return out;
}

std::vector<LabeledSample> project_all(std::span<const LabeledSample> samples, const StiefelPoint& u) {
  std::vector<LabeledSample> out;
  out.reserve(samples.size());
  for (const auto& x : samples) out.push_back({congruence(x.matrix, u), x.label});
  return out;
}

// ---- synth ------------------------------------------------------------------------

struct SynthArgs {
  std::string kind = "spd";
  std::string out;
  std::string structure = "isotropic";
  SyntheticSpec spd;
  TrialSynthSpec trials;
  CLI::Option* out_opt = nullptr;
  CLI::Option* classes_opt = nullptr;
  CLI::Option* per_class_opt = nullptr;
};

void register_synth(CLI::App& app, SynthArgs& a) {
  CLI::App* s = app.add_subcommand("synth", "Generate a deterministic synthetic dataset");
  s->add_option("--kind", a.kind, "spd: SPD matrices; trials: multichannel signals")
      ->check(CLI::IsMember({"spd", "trials"}))
      ->capture_default_str();
  a.out_opt = s->add_option("--out", a.out, "Output directory");
  a.classes_opt = s->add_option("--classes", a.spd.n_classes, "Number of classes")->capture_default_str();
  a.per_class_opt =
      s->add_option("--per-class", a.spd.per_class, "Training items per class (spd: 20, trials: 30)");
  s->add_option("--test-per-class", a.spd.test_per_class, "Held-out items per class")->capture_default_str();
  s->add_option("--seed", a.spd.seed, "Random seed")->capture_default_str();
  s->add_option("--dim", a.spd.dim, "Matrix dimension (spd)")->capture_default_str();
  s->add_option("--block-dim", a.spd.block_dim, "Informative block size (spd, block)")->capture_default_str();
  s->add_option("--separation", a.spd.separation, "Class center distance from identity (spd)")
      ->capture_default_str();
  s->add_option("--noise", a.spd.noise, "Sample spread around the center (spd)")->capture_default_str();
  s->add_option("--structure", a.structure, "isotropic or block (spd)")
      ->check(CLI::IsMember({"isotropic", "block", "block-discriminative"}))
      ->capture_default_str();
  s->add_option("--rotate", a.spd.rotate, "Hide the block behind a random rotation (spd, block)")
      ->capture_default_str();
  TrialSynthSpec& t = a.trials;
  s->add_option("--channels", t.channels, "Channels (trials)")->capture_default_str();
  s->add_option("--sample-rate", t.sample_rate, "Hz (trials)")->capture_default_str();
  s->add_option("--duration", t.duration, "Seconds per trial (trials)")->capture_default_str();
  s->add_option("--source-low", t.source_low, "Class source band low edge, Hz (trials)")->capture_default_str();
  s->add_option("--source-high", t.source_high, "Class source band high edge, Hz (trials)")
      ->capture_default_str();
  s->add_option("--active-start", t.active_start, "Class source span start, s (trials)")->capture_default_str();
  s->add_option("--active-end", t.active_end, "Class source span end, s (trials)")->capture_default_str();
  s->add_option("--burst-length", t.burst_length, "Source burst length, s; 0 fills the span (trials)")
      ->capture_default_str();
  s->add_option("--source-amplitude", t.source_amplitude, "Source amplitude (trials)")->capture_default_str();
  s->add_option("--amplitude-jitter", t.amplitude_jitter, "Log-normal amplitude spread (trials)")
      ->capture_default_str();
  s->add_option("--background-noise", t.noise, "Background noise level (trials)")->capture_default_str();
  s->add_option("--nuisance", t.nuisance, "6 Hz / 32 Hz rhythm level (trials)")->capture_default_str();
  s->add_option("--idle-activity", t.idle_activity, "Out-of-span activity level (trials)")
      ->capture_default_str();
}

json synth_spd(SynthArgs& a) {
  SyntheticSpec& spec = a.spd;
  spec.structure = parse_structure(a.structure);
  if (a.per_class_opt->count() == 0) spec.per_class = SyntheticSpec{}.per_class;
  const SyntheticDataset ds = synthesize(spec);
  const json config = {{"command", "synth"},
                       {"kind", "spd"},
                       {"classes", spec.n_classes},
                       {"per_class", spec.per_class},
                       {"test_per_class", spec.test_per_class},
                       {"dim", spec.dim},
                       {"block_dim", spec.block_dim},
                       {"separation", spec.separation},
                       {"noise", spec.noise},
                       {"structure", to_string(spec.structure)},
                       {"rotate", spec.rotate},
                       {"seed", spec.seed}};
  json summary = {{"train", io::write_spd_dataset(a.out, "train", ds.train, config).string()},
                  {"train_samples", ds.train.size()}};
  if (!ds.test.empty()) {
    summary["test"] = io::write_spd_dataset(a.out, "test", ds.test, config).string();
    summary["test_samples"] = ds.test.size();
  }
  return summary;
}

json synth_trials(SynthArgs& a) {
  TrialSynthSpec spec = a.trials;
  spec.n_classes = a.spd.n_classes;
  spec.seed = a.spd.seed;
  if (a.per_class_opt->count() > 0) spec.per_class = a.spd.per_class;
  const int train_per_class = spec.per_class;
  const int test_per_class = a.spd.test_per_class;
  if (test_per_class < 0) throw ConfigError("--test-per-class must be non-negative");
  spec.per_class = train_per_class + test_per_class;
  const std::vector<TrialSignal> all = synthesize_trials(spec);

  // Trials come out round-robin over classes, so a prefix is stratified.
  const auto cut = static_cast<std::ptrdiff_t>(train_per_class) * spec.n_classes;
  const std::vector<TrialSignal> train(all.begin(), all.begin() + cut);
  const std::vector<TrialSignal> test(all.begin() + cut, all.end());
  const json config = {{"command", "synth"},
                       {"kind", "trials"},
                       {"classes", spec.n_classes},
                       {"per_class", train_per_class},
                       {"test_per_class", test_per_class},
                       {"channels", spec.channels},
                       {"sample_rate", spec.sample_rate},
                       {"duration", spec.duration},
                       {"source_low", spec.source_low},
                       {"source_high", spec.source_high},
                       {"active_start", spec.active_start},
                       {"active_end", spec.active_end},
                       {"burst_length", spec.burst_length},
                       {"source_amplitude", spec.source_amplitude},
                       {"amplitude_jitter", spec.amplitude_jitter},
                       {"background_noise", spec.noise},
                       {"nuisance", spec.nuisance},
                       {"idle_activity", spec.idle_activity},
                       {"seed", spec.seed}};
  json summary = {{"train", io::write_trial_dataset(a.out, "train", train, config).string()},
                  {"train_trials", train.size()}};
  if (!test.empty()) {
    summary["test"] = io::write_trial_dataset(a.out, "test", test, config).string();
    summary["test_trials"] = test.size();
  }
  return summary;
}

json cmd_synth(SynthArgs& a) {
  require(a.out_opt);
  return a.kind == "spd" ? synth_spd(a) : synth_trials(a);
}

// ---- preproc-select -----------------------------------------------------------------

struct PreprocArgs {
  std::string trials;
  std::string out;
  std::string descriptors;
  std::vector<std::string> apply;
  std::vector<double> starts;
  std::vector<double> lengths;
  std::vector<std::string> bands;
  std::string metric = "airm";
  bool fixed = false;
  GridSearchConfig grid = GridSearchConfig::defaults();
  CLI::Option* trials_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

void register_preproc(CLI::App& app, PreprocArgs& a) {
  CLI::App* s = app.add_subcommand("preproc-select", "Choose time window and band by cross-validated MDM");
  a.trials_opt = s->add_option("--trials", a.trials, "Trial dataset manifest");
  a.out_opt = s->add_option("--out", a.out, "Selection report (JSON)");
  s->add_option("--descriptors", a.descriptors, "Write covariance descriptors of the trials to this directory");
  s->add_option("--apply", a.apply, "Further trial manifests to convert with the selected spec");
  s->add_option("--starts", a.starts, "Window starts, s (default 3.0..3.5 step 0.05)")->delimiter(',');
  s->add_option("--lengths", a.lengths, "Window lengths, s (default 1..4 step 0.25)")->delimiter(',');
  s->add_option("--bands", a.bands, "Bands as low:high Hz (default 5:30 5:35 8:30 8:35)")->delimiter(',');
  s->add_option("--folds", a.grid.folds, "Cross-validation folds")->capture_default_str();
  s->add_option("--top-k", a.grid.top_k, "Number of best cases averaged")->capture_default_str();
  s->add_option("--seed", a.grid.seed, "Fold assignment seed")->capture_default_str();
  s->add_option("--shrinkage", a.grid.shrinkage, "Covariance shrinkage")->capture_default_str();
  s->add_option("--filter-order", a.grid.filter_order, "Butterworth prototype order")->capture_default_str();
  s->add_option("--metric", a.metric, "MDM metric: airm or logdet")
      ->check(CLI::IsMember({"airm", "logdet", "jbld"}))
      ->capture_default_str();
  s->add_flag("--fixed", a.fixed, "Skip the search and use 3.75-5.75 s, 8-35 Hz");
  add_karcher(s, a.grid.karcher);
}

std::pair<double, double> parse_band(const std::string& text) {
  const auto sep = text.find(':');
  try {
    if (sep == std::string::npos) throw std::invalid_argument(text);
    std::size_t used = 0;
    const double lo = std::stod(text.substr(0, sep), &used);
    const std::string rest = text.substr(sep + 1);
    const double hi = std::stod(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(text);
    return {lo, hi};
  } catch (const std::exception&) {
    throw UsageError("--bands: expected low:high, got '" + text + "'");
  }
}

json cmd_preproc(PreprocArgs& a) {
  require(a.trials_opt);
  require(a.out_opt);
  GridSearchConfig& g = a.grid;
  if (!a.starts.empty()) g.window_starts = a.starts;
  if (!a.lengths.empty()) g.window_lengths = a.lengths;
  if (!a.bands.empty()) {
    g.bands.clear();
    for (const auto& b : a.bands) g.bands.push_back(parse_band(b));
  }
  g.metric = parse_metric(a.metric);
  g.validate();

  const io::TrialDataset ds = io::read_trial_dataset(a.trials);
  json config = {{"command", "preproc-select"}, {"trials", a.trials}, {"fixed", a.fixed}, {"grid", io::to_json(g)}};
  json report = with_header("preproc-selection", config);

  PreprocSpec chosen = PreprocSpec::fixed_preset();
  if (!a.fixed) {
    const PreprocSelection sel = select_preproc(ds.trials, g);
    chosen = sel.spec;
    json top = json::array();
    for (const CaseResult& c : sel.top) top.push_back({{"spec", io::to_json(c.spec)}, {"accuracy", c.accuracy}});
    report["top"] = std::move(top);
    report["cases_evaluated"] = sel.cases_evaluated;
    report["cases_skipped"] = sel.cases_skipped;
    report["fold_seed"] = sel.seed;
  }
  report["selected"] = io::to_json(chosen);

  auto emit = [&](const io::TrialDataset& trials, const fs::path& dir, const std::string& stem) {
    const std::vector<LabeledSample> d = run_pipeline(trials.trials, chosen, g.shrinkage, g.filter_order);
    json c = config;
    c["selected"] = io::to_json(chosen);
    return io::write_spd_dataset(dir, stem, d, c).string();
  };
  if (!a.descriptors.empty()) {
    json written = json::array();
    written.push_back(emit(ds, a.descriptors, fs::path(a.trials).stem().string()));
    for (const auto& extra : a.apply) {
      written.push_back(emit(io::read_trial_dataset(extra), a.descriptors, fs::path(extra).stem().string()));
    }
    report["descriptors"] = std::move(written);
  } else if (!a.apply.empty()) {
    throw UsageError("--apply needs --descriptors");
  }
  io::write_json(a.out, report);
  return {{"selected", report["selected"]}, {"report", a.out}};
}

// ---- fit / transform ----------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::string out;
  std::string neighbor_metric = "logdet";
  std::string init = "coordinate";
  std::string backend = "parallel";
  bool unsupervised = false;
  DplmConfig cfg;
  CLI::Option* data_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

void register_fit(CLI::App& app, FitArgs& a) {
  CLI::App* s = app.add_subcommand("fit", "Learn a DPLM projection");
  a.data_opt = s->add_option("--data", a.data, "SPD dataset manifest");
  a.out_opt = s->add_option("--out", a.out, "Model file (JSON)");
  DplmConfig& c = a.cfg;
  s->add_option("--target-dim", c.target_dim, "Reduced dimension m")->capture_default_str();
  s->add_option("--k", c.k_neighbors, "Neighborhood size")->capture_default_str();
  s->add_flag("--unsupervised", a.unsupervised, "Ignore labels when choosing neighbors");
  s->add_option("--neighbor-metric", a.neighbor_metric, "logdet or airm")
      ->check(CLI::IsMember({"airm", "logdet", "jbld"}))
      ->capture_default_str();
  s->add_option("--max-iterations", c.max_outer_iterations, "Outer iteration cap")->capture_default_str();
  s->add_option("--grad-tol", c.grad_norm_tol, "Riemannian gradient norm tolerance")->capture_default_str();
  s->add_option("--initial-step", c.initial_step, "First trial step")->capture_default_str();
  s->add_option("--contraction", c.contraction, "Step contraction factor")->capture_default_str();
  s->add_option("--sufficient-decrease", c.sufficient_decrease, "Armijo constant")->capture_default_str();
  s->add_option("--nonmonotone-window", c.nonmonotone_window, "Objectives kept for the reference value")
      ->capture_default_str();
  s->add_option("--max-contractions", c.max_contractions, "Contractions before giving up")
      ->capture_default_str();
  s->add_option("--init", a.init, "coordinate or random")
      ->check(CLI::IsMember({"coordinate", "random"}))
      ->capture_default_str();
  s->add_option("--seed", c.seed, "Seed for random initialization")->capture_default_str();
  s->add_option("--backend", a.backend, "parallel or serial kernels")
      ->check(CLI::IsMember({"parallel", "serial"}))
      ->capture_default_str();
  add_karcher(s, c.karcher);
}

DplmConfig resolve(FitArgs& a) {
  DplmConfig c = a.cfg;
  c.supervised = !a.unsupervised;
  c.neighbor_metric = parse_metric(a.neighbor_metric);
  c.init = parse_init(a.init);
  c.backend = parse_backend(a.backend);
  return c;
}

json cmd_fit(FitArgs& a) {
  require(a.data_opt);
  require(a.out_opt);
  const DplmConfig cfg = resolve(a);
  const io::SpdDataset ds = io::read_spd_dataset(a.data);
  const DplmModel model = fit(ds.samples, cfg);
  const json config = {{"command", "fit"}, {"data", a.data}, {"dplm", io::to_json(cfg)}};
  io::write_json(a.out, io::dplm_model_to_json(model, config));
  return {{"model", a.out},
          {"status", to_string(model.report.status)},
          {"initial_objective", model.report.initial_objective},
          {"final_objective", model.report.final_objective},
          {"iterations", model.report.iterations.size()},
          {"qr_rescues", model.report.qr_rescues}};
}

struct TransformArgs {
  std::string model;
  std::string data;
  std::string out;
  std::string name = "transformed";
  CLI::Option* model_opt = nullptr;
  CLI::Option* data_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

void register_transform(CLI::App& app, TransformArgs& a) {
  CLI::App* s = app.add_subcommand("transform", "Project a dataset with a DPLM model");
  a.model_opt = s->add_option("--model", a.model, "DPLM model file");
  a.data_opt = s->add_option("--data", a.data, "SPD dataset manifest");
  a.out_opt = s->add_option("--out", a.out, "Output directory");
  s->add_option("--name", a.name, "Manifest stem inside the output directory")->capture_default_str();
}

json cmd_transform(TransformArgs& a) {
  require(a.model_opt);
  require(a.data_opt);
  require(a.out_opt);
  const DplmModel model = io::dplm_model_from_json(io::read_json(a.model));
  const io::SpdDataset ds = io::read_spd_dataset(a.data);
  if (!ds.samples.empty() && ds.samples.front().matrix.dim() != model.projection.rows()) {
    throw DataError("transform: model expects " + std::to_string(model.projection.rows()) +
                    "-dimensional matrices, dataset has " + std::to_string(ds.samples.front().matrix.dim()));
  }
  const std::vector<LabeledSample> out = project_all(ds.samples, model.projection);
  const json config = {{"command", "transform"}, {"model", a.model}, {"data", a.data}, {"name", a.name}};
  return {{"manifest", io::write_spd_dataset(a.out, a.name, out, config).string()},
          {"samples", out.size()},
          {"dim", model.projection.cols()}};
}

// ---- train / eval -------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  std::string projection;
  std::string classifier = "mdm";
  std::string metric = "airm";
  std::string filters = "auto";
  double ridge = FgmdmOptions{}.ridge;
  KarcherConfig karcher;
  CLI::Option* data_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

void register_train(CLI::App& app, TrainArgs& a) {
  CLI::App* s = app.add_subcommand("train", "Train an MDM or FGMDM classifier");
  a.data_opt = s->add_option("--data", a.data, "SPD dataset manifest");
  a.out_opt = s->add_option("--out", a.out, "Classifier file (JSON)");
  s->add_option("--projection", a.projection, "DPLM model applied before training and prediction");
  s->add_option("--classifier", a.classifier, "mdm or fgmdm")
      ->check(CLI::IsMember({"mdm", "fgmdm"}))
      ->capture_default_str();
  s->add_option("--metric", a.metric, "airm or logdet")
      ->check(CLI::IsMember({"airm", "logdet", "jbld"}))
      ->capture_default_str();
  s->add_option("--filters", a.filters, "FGMDM retained directions, or auto for classes - 1")
      ->capture_default_str();
  s->add_option("--ridge", a.ridge, "FGMDM within-class scatter ridge")->capture_default_str();
  add_karcher(s, a.karcher);
}

json cmd_train(TrainArgs& a) {
  require(a.data_opt);
  require(a.out_opt);
  const MetricKind metric = parse_metric(a.metric);
  std::optional<int> n_filters;
  if (a.filters != "auto") {
    try {
      std::size_t used = 0;
      n_filters = std::stoi(a.filters, &used);
      if (used != a.filters.size()) throw std::invalid_argument(a.filters);
    } catch (const std::exception&) {
      throw UsageError("--filters: expected a positive integer or auto, got '" + a.filters + "'");
    }
  }
  a.karcher.validate();

  io::SpdDataset ds = io::read_spd_dataset(a.data);
  std::optional<DplmModel> proj;
  if (!a.projection.empty()) {
    proj = io::dplm_model_from_json(io::read_json(a.projection));
    ds.samples = project_all(ds.samples, proj->projection);
  }
  json config = {{"command", "train"},
                 {"data", a.data},
                 {"projection", a.projection.empty() ? json(nullptr) : json(a.projection)},
                 {"classifier", a.classifier},
                 {"metric", to_string(metric)},
                 {"filters", a.filters},
                 {"ridge", a.ridge},
                 {"karcher", io::to_json(a.karcher)}};
  json j = with_header("classifier", config);
  j["classifier"] = a.classifier;
  j["dim"] = ds.samples.empty() ? 0 : ds.samples.front().matrix.dim();
  j["projection"] = proj ? io::matrix_to_json(proj->projection.matrix()) : json(nullptr);
  json summary = {{"model", a.out}, {"classifier", a.classifier}, {"dim", j["dim"]}};
  if (a.classifier == "mdm") {
    j["model"] = io::mdm_to_json(mdm_train(ds.samples, metric, a.karcher));
  } else {
    FgmdmOptions opts;
    opts.n_filters = n_filters;
    opts.ridge = a.ridge;
    opts.metric = metric;
    opts.karcher = a.karcher;
    const FgmdmModel m = fgmdm_train(ds.samples, opts);
    j["model"] = io::fgmdm_to_json(m);
    summary["retained_filters"] = m.retained();
    summary["warnings"] = m.warnings;
  }
  io::write_json(a.out, j);
  return summary;
}

struct EvalArgs {
  std::string model;
  std::string data;
  std::string out;
  CLI::Option* model_opt = nullptr;
  CLI::Option* data_opt = nullptr;
};

void register_eval(CLI::App& app, EvalArgs& a) {
  CLI::App* s = app.add_subcommand("eval", "Evaluate a classifier: accuracy, kappa, confusion matrix");
  a.model_opt = s->add_option("--model", a.model, "Classifier file");
  a.data_opt = s->add_option("--data", a.data, "SPD dataset manifest");
  s->add_option("--out", a.out, "Report file (JSON); printed when omitted");
}

json cmd_eval(EvalArgs& a) {
  require(a.model_opt);
  require(a.data_opt);
  const json m = io::read_json(a.model);
  io::expect_kind(m, "classifier", a.model);
  io::SpdDataset ds = io::read_spd_dataset(a.data);
  if (!m.at("projection").is_null()) {
    const StiefelPoint u(io::matrix_from_json(m.at("projection")));
    if (!ds.samples.empty() && ds.samples.front().matrix.dim() != u.rows()) {
      throw DataError("eval: projection expects " + std::to_string(u.rows()) + "-dimensional matrices");
    }
    ds.samples = project_all(ds.samples, u);
  }
  const std::string kind = m.at("classifier").get<std::string>();
  std::function<Label(const SpdMatrix&)> predict;
  std::optional<MdmModel> mdm;
  std::optional<FgmdmModel> fg;
  if (kind == "mdm") {
    mdm = io::mdm_from_json(m.at("model"));
    predict = [&](const SpdMatrix& x) { return mdm_predict(*mdm, x); };
  } else if (kind == "fgmdm") {
    fg = io::fgmdm_from_json(m.at("model"));
    predict = [&](const SpdMatrix& x) { return fgmdm_predict(*fg, x); };
  } else {
    throw DataError(a.model + ": unknown classifier '" + kind + "'");
  }
  const auto expected_dim = m.at("dim").get<Eigen::Index>();
  std::vector<Label> predicted;
  for (const auto& s : ds.samples) {
    if (s.matrix.dim() != expected_dim) {
      throw DataError("eval: classifier expects " + std::to_string(expected_dim) + "-dimensional matrices");
    }
    predicted.push_back(predict(s.matrix));
  }
  const std::vector<Label> truth = labels_of(ds.samples);
  const ConfusionReport rep = confusion_report(truth, predicted);

  json report = with_header("evaluation", {{"command", "eval"}, {"model", a.model}, {"data", a.data}});
  report["classifier"] = kind;
  report["chosen_dim"] = expected_dim;
  report["samples"] = ds.samples.size();
  const json metrics = io::to_json(rep);
  for (const auto& [k, v] : metrics.items()) report[k] = v;
  report["predictions"] = predicted;
  if (!a.out.empty()) io::write_json(a.out, report);
  return {{"accuracy", rep.accuracy}, {"kappa", rep.kappa.value}, {"chosen_dim", expected_dim},
          {"report", a.out.empty() ? json(nullptr) : json(a.out)}};
}

// ---- bench --------------------------------------------------------------------------

struct BenchArgs {
  std::vector<int> sizes{100, 200, 400};
  std::vector<int> dims{22};
  int k = 5;
  int repetitions = 3;
  int m = 0;
  int iterations = 10;
  std::uint64_t seed = 0;
  std::string backend = "parallel";
  std::string out;
};

void register_bench(CLI::App& app, BenchArgs& a) {
  CLI::App* s = app.add_subcommand("bench", "Time DPLM iterations over sample counts and dimensions");
  s->add_option("--sizes", a.sizes, "Sample counts N")->delimiter(',')->capture_default_str();
  s->add_option("--dims", a.dims, "Matrix dimensions n")->delimiter(',')->capture_default_str();
  s->add_option("--k", a.k, "Neighborhood size")->capture_default_str();
  s->add_option("--repetitions", a.repetitions, "Repetitions per grid point")->capture_default_str();
  s->add_option("--m", a.m, "Target dimension; 0 means n / 2")->capture_default_str();
  s->add_option("--iterations", a.iterations, "Outer iterations timed per repetition")->capture_default_str();
  s->add_option("--seed", a.seed, "Data seed")->capture_default_str();
  s->add_option("--backend", a.backend, "parallel or serial kernels")
      ->check(CLI::IsMember({"parallel", "serial"}))
      ->capture_default_str();
  s->add_option("--out", a.out, "CSV path; printed when omitted (a .meta.json sidecar holds the config)");
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::string cmd_bench(const BenchArgs& a) {
  if (a.sizes.empty() || a.dims.empty()) throw ConfigError("bench: --sizes and --dims must be non-empty");
  if (a.repetitions < 1 || a.iterations < 1 || a.k < 1 || a.m < 0) {
    throw ConfigError("bench: --repetitions, --iterations and --k must be positive, --m non-negative");
  }
  std::string csv = "N,n,K,seconds_per_iteration\n";
  for (int n : a.dims) {
    for (int big_n : a.sizes) {
      if (big_n < 2 * (a.k + 1)) {
        throw ConfigError("bench: N = " + std::to_string(big_n) + " leaves fewer than K + 1 samples per class");
      }
      SyntheticSpec spec;
      spec.dim = n;
      spec.per_class = (big_n + 1) / 2;
      spec.noise = 0.3;
      spec.seed = a.seed;
      SyntheticDataset ds = synthesize(spec);
      ds.train.erase(ds.train.begin() + big_n, ds.train.end());

      DplmConfig cfg;
      cfg.target_dim = a.m > 0 ? a.m : std::max(1, n / 2);
      cfg.k_neighbors = a.k;
      cfg.max_outer_iterations = a.iterations;
      cfg.grad_norm_tol = std::numeric_limits<double>::min();
      cfg.backend = parse_backend(a.backend);
      std::vector<double> per_rep;
      for (int r = 0; r < a.repetitions; ++r) {
        const DplmModel model = fit(ds.train, cfg);
        std::vector<double> secs;
        for (const auto& it : model.report.iterations) secs.push_back(it.seconds);
        per_rep.push_back(median(secs));
      }
      csv += std::to_string(big_n) + "," + std::to_string(n) + "," + std::to_string(a.k) + "," +
             io::format_double(median(per_rep)) + "\n";
    }
  }
  if (!a.out.empty()) {
    io::write_text(a.out, csv);
    const json meta = with_header("bench", {{"command", "bench"},
                                            {"sizes", a.sizes},
                                            {"dims", a.dims},
                                            {"k", a.k},
                                            {"repetitions", a.repetitions},
                                            {"m", a.m},
                                            {"iterations", a.iterations},
                                            {"seed", a.seed},
                                            {"backend", a.backend}});
    io::write_json(a.out + ".meta.json", meta);
  }
  return csv;
}

// ---- errors -------------------------------------------------------------------------

int report_error(std::ostream& err, int code, std::string_view kind, const std::string& message) {
  const json j = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  err << j.dump() << "\n";
  return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geometry-aware dimensionality reduction and classification for SPD matrices", "dplm"};
  app.require_subcommand(1);
  SynthArgs synth;
  PreprocArgs preproc;
  FitArgs fit_args;
  TransformArgs transform_args;
  TrainArgs train;
  EvalArgs eval;
  BenchArgs bench;
  register_synth(app, synth);
  register_preproc(app, preproc);
  register_fit(app, fit_args);
  register_transform(app, transform_args);
  register_train(app, train);
  register_eval(app, eval);
  register_bench(app, bench);

  std::map<CLI::App*, std::string> config_paths;
  for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; })) {
    sub->add_option("--config", config_paths[sub], "JSON file with option values; flags take precedence");
  }

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      return report_error(err, kUsage, "usage", e.what());
    }
    CLI::App* sub = app.get_subcommands().front();
    if (!config_paths[sub].empty()) {
      try {
        apply_config(sub, config_paths[sub]);
      } catch (const CLI::ParseError& e) {
        return report_error(err, kUsage, "usage", config_paths[sub] + ": " + e.what());
      }
    }

    const std::string name = sub->get_name();
    if (name == "bench") {
      const std::string csv = cmd_bench(bench);
      if (bench.out.empty()) out << csv;
      else out << json({{"csv", bench.out}}).dump() << "\n";
      return kOk;
    }
    json result;
    if (name == "synth") result = cmd_synth(synth);
    else if (name == "preproc-select") result = cmd_preproc(preproc);
    else if (name == "fit") result = cmd_fit(fit_args);
    else if (name == "transform") result = cmd_transform(transform_args);
    else if (name == "train") result = cmd_train(train);
    else if (name == "eval") result = cmd_eval(eval);
    out << result.dump(2) << "\n";
    return kOk;
  } catch (const UsageError& e) {
    return report_error(err, kUsage, "usage", e.what());
  } catch (const ConfigError& e) {
    return report_error(err, kUsage, "config", e.what());
  } catch (const DataError& e) {
    return report_error(err, kData, "data", e.what());
  } catch (const ValidationError& e) {
    return report_error(err, kData, "validation", e.what());
  } catch (const NumericalError& e) {
    return report_error(err, kNumerical, "numerical", e.what());
  } catch (const fs::filesystem_error& e) {
    return report_error(err, kData, "data", e.what());
  } catch (const io::json::exception& e) {
    return report_error(err, kData, "data", e.what());
  } catch (const std::exception& e) {
    return report_error(err, kInternal, "internal", e.what());
  }
}

}  // namespace spd::cli
