#include "spd/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spd/error.hpp"

namespace spd::io {

namespace {

std::string sample_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu.csv", i);
  return buf;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

json checked_parse(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(origin + ": invalid JSON: " + e.what());
  }
}

template <class F>
auto with_schema(const std::string& origin, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw DataError(origin + ": schema violation: " + e.what());
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_matrix_csv(const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

Matrix parse_matrix_csv(std::string_view text, const std::string& origin) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    std::vector<double> row;
    while (true) {
      const std::size_t comma = line.find(',');
      std::string_view cell = line.substr(0, comma);
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty()) {
        throw DataError(origin + ":" + std::to_string(line_no) + ": cannot parse '" +
                        std::string(cell) + "' as a number");
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError(origin + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(rows.front().size()) + " columns, found " +
                      std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(origin + ": empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

Matrix read_matrix_csv(const fs::path& path) { return parse_matrix_csv(read_text(path), path.string()); }

void write_matrix_csv(const fs::path& path, const Matrix& m) { write_text(path, format_matrix_csv(m)); }

json read_json(const fs::path& path) { return checked_parse(read_text(path), path.string()); }

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json matrix_to_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    data.push_back(std::move(row));
  }
  return data;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw DataError("matrix must be a non-empty array of rows");
  const std::size_t cols = j.front().size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw DataError("matrix rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

void expect_kind(const json& j, std::string_view kind, const std::string& origin) {
  if (!j.is_object()) throw DataError(origin + ": expected a JSON object");
  const std::string version = j.value("format_version", "");
  if (version != kFormatVersion) {
    throw DataError(origin + ": unsupported format_version '" + version + "' (expected " +
                    kFormatVersion + ")");
  }
  const std::string found = j.value("kind", "");
  if (found != kind) {
    throw DataError(origin + ": expected kind '" + std::string(kind) + "', found '" + found + "'");
  }
}

// ---- datasets -------------------------------------------------------------------

fs::path write_spd_dataset(const fs::path& dir, const std::string& stem,
                           std::span<const LabeledSample> samples, const json& config) {
  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["kind"] = "spd-dataset";
  manifest["dim"] = samples.empty() ? 0 : samples.front().matrix.dim();
  manifest["config"] = config;
  json list = json::array();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string rel = stem + "/" + sample_name(i);
    write_matrix_csv(dir / rel, samples[i].matrix.matrix());
    list.push_back({{"path", rel}, {"label", samples[i].label}});
  }
  manifest["samples"] = std::move(list);
  const fs::path path = dir / (stem + ".json");
  write_json(path, manifest);
  return path;
}

SpdDataset read_spd_dataset(const fs::path& manifest) {
  const std::string origin = manifest.string();
  const json j = read_json(manifest);
  expect_kind(j, "spd-dataset", origin);
  return with_schema(origin, [&] {
    SpdDataset ds;
    ds.config = j.value("config", json::object());
    const auto dim = j.at("dim").get<Eigen::Index>();
    const fs::path base = manifest.parent_path();
    for (const json& item : j.at("samples")) {
      const fs::path p = base / item.at("path").get<std::string>();
      const Matrix m = read_matrix_csv(p);
      if (m.rows() != dim || m.cols() != dim) {
        throw DataError(p.string() + ": expected a " + std::to_string(dim) + "x" + std::to_string(dim) +
                        " matrix");
      }
      try {
        ds.samples.push_back({SpdMatrix(m), item.at("label").get<Label>()});
      } catch (const ValidationError& e) {
        throw DataError(p.string() + ": " + e.what());
      } catch (const NumericalError& e) {
        throw DataError(p.string() + ": " + e.what());
      }
    }
    return ds;
  });
}

fs::path write_trial_dataset(const fs::path& dir, const std::string& stem,
                             std::span<const TrialSignal> trials, const json& config) {
  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["kind"] = "trial-dataset";
  manifest["sample_rate"] = trials.empty() ? 0.0 : trials.front().sample_rate;
  manifest["trial_t0"] = trials.empty() ? 0.0 : trials.front().t0;
  manifest["config"] = config;
  json list = json::array();
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].sample_rate != trials.front().sample_rate || trials[i].t0 != trials.front().t0) {
      throw ValidationError("trial dataset: every trial must share sample rate and t0");
    }
    const std::string rel = stem + "/" + sample_name(i);
    write_matrix_csv(dir / rel, trials[i].data);
    list.push_back({{"path", rel}, {"label", trials[i].label}});
  }
  manifest["trials"] = std::move(list);
  const fs::path path = dir / (stem + ".json");
  write_json(path, manifest);
  return path;
}

TrialDataset read_trial_dataset(const fs::path& manifest) {
  const std::string origin = manifest.string();
  const json j = read_json(manifest);
  if (j.contains("format_version") || j.contains("kind")) expect_kind(j, "trial-dataset", origin);
  return with_schema(origin, [&] {
    TrialDataset ds;
    ds.config = j.value("config", json::object());
    const double rate = j.at("sample_rate").get<double>();
    const double t0 = j.value("trial_t0", 0.0);
    if (!(rate > 0.0)) throw DataError(origin + ": sample_rate must be positive");
    const fs::path base = manifest.parent_path();
    for (const json& item : j.at("trials")) {
      const fs::path p = base / item.at("path").get<std::string>();
      ds.trials.push_back({read_matrix_csv(p), rate, item.at("label").get<Label>(), t0});
    }
    return ds;
  });
}

// ---- configs and models -----------------------------------------------------------

json to_json(const KarcherConfig& cfg) {
  return {{"max_iterations", cfg.max_iterations}, {"tolerance", cfg.tolerance}, {"step_size", cfg.step_size}};
}

KarcherConfig karcher_from_json(const json& j) {
  KarcherConfig cfg;
  cfg.max_iterations = get_or(j, "max_iterations", cfg.max_iterations);
  cfg.tolerance = get_or(j, "tolerance", cfg.tolerance);
  cfg.step_size = get_or(j, "step_size", cfg.step_size);
  return cfg;
}

json to_json(const DplmConfig& cfg) {
  return {{"target_dim", cfg.target_dim},
          {"k", cfg.k_neighbors},
          {"supervised", cfg.supervised},
          {"neighbor_metric", to_string(cfg.neighbor_metric)},
          {"max_iterations", cfg.max_outer_iterations},
          {"grad_tol", cfg.grad_norm_tol},
          {"initial_step", cfg.initial_step},
          {"contraction", cfg.contraction},
          {"sufficient_decrease", cfg.sufficient_decrease},
          {"nonmonotone_window", cfg.nonmonotone_window},
          {"max_contractions", cfg.max_contractions},
          {"init", to_string(cfg.init)},
          {"seed", cfg.seed},
          {"backend", to_string(cfg.backend)},
          {"karcher", to_json(cfg.karcher)}};
}

DplmConfig dplm_config_from_json(const json& j) {
  DplmConfig cfg;
  cfg.target_dim = get_or(j, "target_dim", cfg.target_dim);
  cfg.k_neighbors = get_or(j, "k", cfg.k_neighbors);
  cfg.supervised = get_or(j, "supervised", cfg.supervised);
  if (j.contains("neighbor_metric")) cfg.neighbor_metric = parse_metric(j.at("neighbor_metric").get<std::string>());
  cfg.max_outer_iterations = get_or(j, "max_iterations", cfg.max_outer_iterations);
  cfg.grad_norm_tol = get_or(j, "grad_tol", cfg.grad_norm_tol);
  cfg.initial_step = get_or(j, "initial_step", cfg.initial_step);
  cfg.contraction = get_or(j, "contraction", cfg.contraction);
  cfg.sufficient_decrease = get_or(j, "sufficient_decrease", cfg.sufficient_decrease);
  cfg.nonmonotone_window = get_or(j, "nonmonotone_window", cfg.nonmonotone_window);
  cfg.max_contractions = get_or(j, "max_contractions", cfg.max_contractions);
  if (j.contains("init")) cfg.init = parse_init(j.at("init").get<std::string>());
  cfg.seed = get_or(j, "seed", cfg.seed);
  if (j.contains("backend")) cfg.backend = parse_backend(j.at("backend").get<std::string>());
  if (j.contains("karcher")) cfg.karcher = karcher_from_json(j.at("karcher"));
  return cfg;
}

json to_json(const TrainingReport& r) {
  json iters = json::array();
  for (const IterationRecord& it : r.iterations) {
    iters.push_back({{"iteration", it.iteration},
                     {"objective", it.objective},
                     {"reference", it.reference},
                     {"step", it.step},
                     {"skew_norm_sq", it.skew_norm_sq},
                     {"grad_norm", it.grad_norm},
                     {"feasibility", it.feasibility},
                     {"contractions", it.contractions}});
  }
  return {{"status", to_string(r.status)},
          {"initial_objective", r.initial_objective},
          {"final_objective", r.final_objective},
          {"initial_grad_norm", r.initial_grad_norm},
          {"iterations_run", r.iterations.size()},
          {"qr_rescues", r.qr_rescues},
          {"objective_evaluations", r.objective_evaluations},
          {"iterations", std::move(iters)}};
}

json to_json(const PreprocSpec& s) {
  return {{"window_start", s.window_start},
          {"window_end", s.window_end},
          {"band_low", s.band_low},
          {"band_high", s.band_high}};
}

PreprocSpec preproc_from_json(const json& j) {
  return with_schema("preproc spec", [&] {
    return PreprocSpec{j.at("window_start").get<double>(), j.at("window_end").get<double>(),
                       j.at("band_low").get<double>(), j.at("band_high").get<double>()};
  });
}

json to_json(const GridSearchConfig& cfg) {
  json bands = json::array();
  for (const auto& [lo, hi] : cfg.bands) bands.push_back({lo, hi});
  return {{"window_starts", cfg.window_starts},
          {"window_lengths", cfg.window_lengths},
          {"bands", std::move(bands)},
          {"folds", cfg.folds},
          {"top_k", cfg.top_k},
          {"seed", cfg.seed},
          {"shrinkage", cfg.shrinkage},
          {"filter_order", cfg.filter_order},
          {"metric", to_string(cfg.metric)},
          {"karcher", to_json(cfg.karcher)}};
}

json to_json(const ConfusionReport& r) {
  json confusion = json::array();
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < r.confusion.cols(); ++k) row.push_back(r.confusion(i, k));
    confusion.push_back(std::move(row));
  }
  return {{"labels", r.labels},
          {"accuracy", r.accuracy},
          {"kappa", r.kappa.value},
          {"observed_agreement", r.kappa.observed},
          {"chance_agreement", r.kappa.chance},
          {"kappa_degenerate", r.kappa.degenerate},
          {"confusion", std::move(confusion)}};
}

json dplm_model_to_json(const DplmModel& model, const json& config) {
  return {{"format_version", kFormatVersion},
          {"kind", "dplm-model"},
          {"config", config},
          {"ambient_dim", model.projection.rows()},
          {"target_dim", model.projection.cols()},
          {"k", model.k_neighbors},
          {"projection", matrix_to_json(model.projection.matrix())},
          {"training", to_json(model.report)}};
}

DplmModel dplm_model_from_json(const json& j) {
  expect_kind(j, "dplm-model", "model");
  return with_schema("model", [&] {
    DplmModel m{StiefelPoint(matrix_from_json(j.at("projection"))), j.value("k", 0), {}};
    if (j.contains("training")) {
      const json& t = j.at("training");
      m.report.status = parse_status(t.value("status", "max_iterations"));
      m.report.initial_objective = t.value("initial_objective", 0.0);
      m.report.final_objective = t.value("final_objective", 0.0);
      m.report.initial_grad_norm = t.value("initial_grad_norm", 0.0);
      m.report.qr_rescues = t.value("qr_rescues", 0);
      m.report.objective_evaluations = t.value("objective_evaluations", 0);
    }
    return m;
  });
}

json mdm_to_json(const MdmModel& model) {
  json means = json::array();
  for (const auto& [label, mean] : model.class_means) {
    means.push_back({{"label", label}, {"mean", matrix_to_json(mean.matrix())}});
  }
  return {{"metric", to_string(model.metric)}, {"class_means", std::move(means)}};
}

MdmModel mdm_from_json(const json& j) {
  return with_schema("classifier", [&] {
    MdmModel m;
    m.metric = parse_metric(j.at("metric").get<std::string>());
    for (const json& item : j.at("class_means")) {
      m.class_means.emplace(item.at("label").get<Label>(), SpdMatrix(matrix_from_json(item.at("mean"))));
    }
    if (m.class_means.empty()) throw DataError("classifier: no class means");
    return m;
  });
}

json fgmdm_to_json(const FgmdmModel& model) {
  return {{"reference", matrix_to_json(model.reference.matrix())},
          {"filters", matrix_to_json(model.filters)},
          {"requested_filters", model.requested_filters},
          {"retained_filters", model.retained()},
          {"ridge", model.ridge},
          {"warnings", model.warnings},
          {"inner", mdm_to_json(model.inner)}};
}

FgmdmModel fgmdm_from_json(const json& j) {
  return with_schema("classifier", [&] {
    FgmdmModel m{SpdMatrix(matrix_from_json(j.at("reference"))), matrix_from_json(j.at("filters")),
                 mdm_from_json(j.at("inner")), j.value("requested_filters", 0), j.value("ridge", 0.0),
                 j.value("warnings", std::vector<std::string>{})};
    return m;
  });
}

}  // namespace spd::io
