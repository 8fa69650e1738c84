#pragma once

// Trial signals -> band-pass -> time window -> covariance descriptor, and the
// cross-validated selection of window and band.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "spd/dplm.hpp"
#include "spd/geometry.hpp"

namespace spd {

/// Multichannel segment (channels x samples). Sample k sits at t0 + k / rate.
struct TrialSignal {
  Matrix data;
  double sample_rate = 0.0;
  Label label = 0;
  double t0 = 0.0;

  Eigen::Index channels() const { return data.rows(); }
  Eigen::Index samples() const { return data.cols(); }
  double duration() const { return static_cast<double>(samples()) / sample_rate; }
};

struct PreprocSpec {
  double window_start = 0.0;
  double window_end = 0.0;
  double band_low = 0.0;
  double band_high = 0.0;

  void validate(double sample_rate) const;

  /// 8-35 Hz, 3.75-5.75 s.
  static PreprocSpec fixed_preset();
};

struct GridSearchConfig {
  std::vector<double> window_starts;
  std::vector<double> window_lengths;
  std::vector<std::pair<double, double>> bands;
  int folds = 10;
  int top_k = 10;
  std::uint64_t seed = 42;
  double shrinkage = 0.01;
  int filter_order = 4;
  MetricKind metric = MetricKind::Airm;
  KarcherConfig karcher;

  /// Starts 3.0..3.5 s step 0.05, lengths 1..4 s step 0.25, bands {5,8} x {30,35} Hz.
  static GridSearchConfig defaults();
  void validate() const;
};

TrialSignal bandpass(const TrialSignal& signal, double low_hz, double high_hz, int order = 4);

/// Samples [round((start - t0) rate), round((end - t0) rate)).
TrialSignal extract_window(const TrialSignal& signal, double start, double end);

/// X X^T / (N - 1), then (1 - g) C + g (trace(C) / channels) I.
SpdMatrix covariance_descriptor(const TrialSignal& signal, double shrinkage);

std::vector<LabeledSample> run_pipeline(std::span<const TrialSignal> trials, const PreprocSpec& spec,
                                        double shrinkage, int filter_order = 4);

// ---- cross-validation ----------------------------------------------------------

/// Fold index for each item; every class is spread evenly over the folds.
std::vector<int> stratified_folds(std::span<const Label> labels, int folds, std::uint64_t seed);

struct FoldTrace {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct CrossValidation {
  double accuracy = 0.0;
  std::vector<FoldTrace> folds;
};

/// MDM accuracy pooled over folds; class means only ever see training items.
CrossValidation cross_validate_mdm(std::span<const LabeledSample> samples,
                                   std::span<const int> fold_of, int folds, MetricKind metric,
                                   const KarcherConfig& karcher = {});

struct CaseResult {
  PreprocSpec spec;
  double accuracy = 0.0;
};

struct PreprocSelection {
  PreprocSpec spec;
  std::vector<CaseResult> top;  // best first
  std::size_t cases_evaluated = 0;
  std::size_t cases_skipped = 0;  // windows that leave some trial's timeline
  std::uint64_t seed = 0;
};

PreprocSelection select_preproc(std::span<const TrialSignal> trials, const GridSearchConfig& cfg);

}  // namespace spd
