#pragma once

// On-disk formats: matrices as CSV, datasets as JSON manifests pointing at
// CSV files, models and reports as JSON.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "spd/classify.hpp"
#include "spd/dplm.hpp"
#include "spd/pipeline.hpp"

namespace spd::io {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr const char* kFormatVersion = "spd-dplm/1";

/// Shortest text that parses back to exactly the same double.
std::string format_double(double v);

std::string format_matrix_csv(const Matrix& m);
Matrix parse_matrix_csv(std::string_view text, const std::string& origin = "<memory>");
Matrix read_matrix_csv(const fs::path& path);
void write_matrix_csv(const fs::path& path, const Matrix& m);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);
json read_json(const fs::path& path);
void write_json(const fs::path& path, const json& j);

json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);

// ---- datasets -------------------------------------------------------------------

struct SpdDataset {
  std::vector<LabeledSample> samples;
  json config;  // generator / producer config echoed in the manifest
};

/// Writes one CSV per sample under `dir/<stem>/` plus `dir/<stem>.json`.
fs::path write_spd_dataset(const fs::path& dir, const std::string& stem,
                           std::span<const LabeledSample> samples, const json& config);
SpdDataset read_spd_dataset(const fs::path& manifest);

struct TrialDataset {
  std::vector<TrialSignal> trials;
  json config;
};

fs::path write_trial_dataset(const fs::path& dir, const std::string& stem,
                             std::span<const TrialSignal> trials, const json& config);
TrialDataset read_trial_dataset(const fs::path& manifest);

// ---- models ---------------------------------------------------------------------

json to_json(const KarcherConfig& cfg);
KarcherConfig karcher_from_json(const json& j);
json to_json(const DplmConfig& cfg);
DplmConfig dplm_config_from_json(const json& j);
json to_json(const TrainingReport& r);
json to_json(const PreprocSpec& s);
PreprocSpec preproc_from_json(const json& j);
json to_json(const GridSearchConfig& cfg);
json to_json(const ConfusionReport& r);

json dplm_model_to_json(const DplmModel& model, const json& config);
DplmModel dplm_model_from_json(const json& j);

json mdm_to_json(const MdmModel& model);
MdmModel mdm_from_json(const json& j);
json fgmdm_to_json(const FgmdmModel& model);
FgmdmModel fgmdm_from_json(const json& j);

/// Checks `kind` and `format_version`; throws DataError otherwise.
void expect_kind(const json& j, std::string_view kind, const std::string& origin);

}  // namespace spd::io
