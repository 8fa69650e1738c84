#include "spd/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <random>
#include <tuple>

#include "spd/butterworth.hpp"
#include "spd/classify.hpp"

namespace spd {

namespace {

void require_rate(const TrialSignal& s) {
  if (!(s.sample_rate > 0.0)) throw ValidationError("trial sample rate must be positive");
}

std::pair<Eigen::Index, Eigen::Index> window_indices(const TrialSignal& s, double start, double end) {
  const auto begin = static_cast<Eigen::Index>(std::llround((start - s.t0) * s.sample_rate));
  const auto stop = static_cast<Eigen::Index>(std::llround((end - s.t0) * s.sample_rate));
  return {begin, stop};
}

bool window_fits(const TrialSignal& s, double start, double end) {
  const auto [begin, stop] = window_indices(s, start, end);
  return begin >= 0 && stop <= s.samples() && stop > begin;
}

}  // namespace

void PreprocSpec::validate(double sample_rate) const {
  if (!(window_end > window_start)) throw ConfigError("window end must follow window start");
  if (!(band_low > 0.0 && band_low < band_high && band_high < 0.5 * sample_rate)) {
    throw ConfigError("band must satisfy 0 < low < high < sample_rate / 2");
  }
}

PreprocSpec PreprocSpec::fixed_preset() { return {3.75, 5.75, 8.0, 35.0}; }

GridSearchConfig GridSearchConfig::defaults() {
  GridSearchConfig cfg;
  for (int i = 0; i <= 10; ++i) cfg.window_starts.push_back(3.0 + 0.05 * i);
  for (int i = 0; i <= 12; ++i) cfg.window_lengths.push_back(1.0 + 0.25 * i);
  for (double low : {5.0, 8.0}) {
    for (double high : {30.0, 35.0}) cfg.bands.emplace_back(low, high);
  }
  return cfg;
}

void GridSearchConfig::validate() const {
  if (window_starts.empty() || window_lengths.empty() || bands.empty()) {
    throw ConfigError("grid search: starts, lengths and bands must be non-empty");
  }
  for (double len : window_lengths) {
    if (!(len > 0.0)) throw ConfigError("grid search: window lengths must be positive");
  }
  if (folds < 2) throw ConfigError("grid search: need at least two folds");
  if (top_k < 1) throw ConfigError("grid search: top_k must be positive");
  if (!(shrinkage >= 0.0 && shrinkage < 1.0)) throw ConfigError("shrinkage must lie in [0, 1)");
  if (filter_order < 1) throw ConfigError("filter order must be positive");
  karcher.validate();
}

TrialSignal bandpass(const TrialSignal& signal, double low_hz, double high_hz, int order) {
  require_rate(signal);
  const dsp::SosFilter filter = dsp::butterworth_bandpass(order, low_hz, high_hz, signal.sample_rate);
  TrialSignal out = signal;
  for (Eigen::Index c = 0; c < signal.channels(); ++c) {
    const Vector row = signal.data.row(c).transpose();
    const std::vector<double> y =
        dsp::filtfilt(filter, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    out.data.row(c) = Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size())).transpose();
  }
  return out;
}

TrialSignal extract_window(const TrialSignal& signal, double start, double end) {
  require_rate(signal);
  if (!(end > start)) throw ValidationError("extract_window: end must follow start");
  const auto [begin, stop] = window_indices(signal, start, end);
  if (begin < 0 || stop > signal.samples() || stop <= begin) {
    throw ValidationError("extract_window: [" + std::to_string(start) + ", " + std::to_string(end) +
                          "] s lies outside the trial timeline [" + std::to_string(signal.t0) + ", " +
                          std::to_string(signal.t0 + signal.duration()) + "] s");
  }
  TrialSignal out = signal;
  out.data = signal.data.middleCols(begin, stop - begin);
  out.t0 = signal.t0 + static_cast<double>(begin) / signal.sample_rate;
  return out;
}

SpdMatrix covariance_descriptor(const TrialSignal& signal, double shrinkage) {
  if (!(shrinkage >= 0.0 && shrinkage < 1.0)) throw ConfigError("shrinkage must lie in [0, 1)");
  if (signal.samples() < 2) throw ValidationError("covariance_descriptor: need at least two samples");
  const Eigen::Index ch = signal.channels();
  Matrix c = signal.data * signal.data.transpose() / static_cast<double>(signal.samples() - 1);
  if (shrinkage > 0.0) {
    c = (1.0 - shrinkage) * c + shrinkage * (c.trace() / static_cast<double>(ch)) * Matrix::Identity(ch, ch);
  }
  try {
    return SpdMatrix(linalg::symmetrized(c));
  } catch (const NotPositiveDefinite& e) {
    throw NotPositiveDefinite(std::string("covariance descriptor is rank deficient (") + e.what() +
                              "); use a nonzero shrinkage");
  }
}

std::vector<LabeledSample> run_pipeline(std::span<const TrialSignal> trials, const PreprocSpec& spec,
                                        double shrinkage, int filter_order) {
  std::vector<LabeledSample> out;
  out.reserve(trials.size());
  for (const auto& t : trials) {
    spec.validate(t.sample_rate);
    const TrialSignal filtered = bandpass(t, spec.band_low, spec.band_high, filter_order);
    const TrialSignal windowed = extract_window(filtered, spec.window_start, spec.window_end);
    out.push_back({covariance_descriptor(windowed, shrinkage), t.label});
  }
  return out;
}

// ---- cross-validation ----------------------------------------------------------

std::vector<int> stratified_folds(std::span<const Label> labels, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("stratified folds: need at least two folds");
  std::map<Label, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [label, idx] : by_class) {
    if (idx.size() < static_cast<std::size_t>(folds)) {
      throw ConfigError("class " + std::to_string(label) + " has " + std::to_string(idx.size()) +
                        " trials; stratified " + std::to_string(folds) + "-fold CV needs at least " +
                        std::to_string(folds));
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<int> fold_of(labels.size(), 0);
  std::size_t offset = 0;
  for (auto& [label, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      fold_of[idx[k]] = static_cast<int>((offset + k) % static_cast<std::size_t>(folds));
    }
    offset += idx.size();
  }
  return fold_of;
}

CrossValidation cross_validate_mdm(std::span<const LabeledSample> samples,
                                   std::span<const int> fold_of, int folds, MetricKind metric,
                                   const KarcherConfig& karcher) {
  if (fold_of.size() != samples.size()) throw DimensionMismatch("fold assignment length mismatch");
  CrossValidation cv;
  std::size_t correct = 0;
  std::size_t tested = 0;
  for (int f = 0; f < folds; ++f) {
    FoldTrace trace;
    std::vector<LabeledSample> train;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (fold_of[i] == f) {
        trace.test.push_back(i);
      } else {
        trace.train.push_back(i);
        train.push_back(samples[i]);
      }
    }
    if (!trace.test.empty()) {
      const MdmModel model = mdm_train(train, metric, karcher);
      for (std::size_t i : trace.test) {
        correct += mdm_predict(model, samples[i].matrix) == samples[i].label ? 1 : 0;
        ++tested;
      }
    }
    cv.folds.push_back(std::move(trace));
  }
  cv.accuracy = tested ? static_cast<double>(correct) / static_cast<double>(tested) : 0.0;
  return cv;
}

// ---- grid search -----------------------------------------------------------------

PreprocSelection select_preproc(std::span<const TrialSignal> trials, const GridSearchConfig& cfg) {
  cfg.validate();
  if (trials.empty()) throw ValidationError("select_preproc: no trials");
  const double rate = trials.front().sample_rate;
  for (const auto& t : trials) {
    require_rate(t);
    if (t.sample_rate != rate) throw ValidationError("select_preproc: trials differ in sample rate");
  }

  std::vector<Label> labels;
  for (const auto& t : trials) labels.push_back(t.label);
  const std::vector<int> fold_of = stratified_folds(labels, cfg.folds, cfg.seed);

  // Filtering depends only on the band; windows are sliced afterwards.
  std::vector<std::vector<TrialSignal>> filtered(cfg.bands.size());
  for (std::size_t b = 0; b < cfg.bands.size(); ++b) {
    PreprocSpec{0.0, 1.0, cfg.bands[b].first, cfg.bands[b].second}.validate(rate);
    filtered[b].resize(trials.size());
    const auto count = static_cast<std::ptrdiff_t>(trials.size());
    std::vector<std::exception_ptr> errors(trials.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      const auto k = static_cast<std::size_t>(i);
      try {
        filtered[b][k] = bandpass(trials[k], cfg.bands[b].first, cfg.bands[b].second, cfg.filter_order);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  struct Case {
    std::size_t band;
    double start;
    double length;
  };
  std::vector<Case> cases;
  PreprocSelection sel;
  sel.seed = cfg.seed;
  for (std::size_t b = 0; b < cfg.bands.size(); ++b) {
    for (double start : cfg.window_starts) {
      for (double length : cfg.window_lengths) {
        const bool fits = std::all_of(trials.begin(), trials.end(), [&](const TrialSignal& t) {
          return window_fits(t, start, start + length);
        });
        if (fits) {
          cases.push_back({b, start, length});
        } else {
          ++sel.cases_skipped;
        }
      }
    }
  }
  if (cases.empty()) throw ConfigError("select_preproc: no grid window fits inside every trial");

  std::vector<double> accuracy(cases.size(), 0.0);
  std::vector<std::exception_ptr> errors(cases.size());
  const auto n_cases = static_cast<std::ptrdiff_t>(cases.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ci = 0; ci < n_cases; ++ci) {
    const auto k = static_cast<std::size_t>(ci);
    try {
      const Case& c = cases[k];
      std::vector<LabeledSample> descriptors;
      descriptors.reserve(trials.size());
      for (const TrialSignal& t : filtered[c.band]) {
        const TrialSignal w = extract_window(t, c.start, c.start + c.length);
        descriptors.push_back({covariance_descriptor(w, cfg.shrinkage), t.label});
      }
      accuracy[k] = cross_validate_mdm(descriptors, fold_of, cfg.folds, cfg.metric, cfg.karcher).accuracy;
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  sel.cases_evaluated = cases.size();

  std::vector<std::size_t> order(cases.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key = [&](std::size_t k) {
    const Case& c = cases[k];
    return std::make_tuple(-accuracy[k], cfg.bands[c.band].first, c.start, c.length,
                           cfg.bands[c.band].second);
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });

  const std::size_t keep = std::min(order.size(), static_cast<std::size_t>(cfg.top_k));
  PreprocSpec mean{0.0, 0.0, 0.0, 0.0};
  for (std::size_t r = 0; r < keep; ++r) {
    const Case& c = cases[order[r]];
    const PreprocSpec spec{c.start, c.start + c.length, cfg.bands[c.band].first, cfg.bands[c.band].second};
    sel.top.push_back({spec, accuracy[order[r]]});
    mean.window_start += spec.window_start;
    mean.window_end += spec.window_end;
    mean.band_low += spec.band_low;
    mean.band_high += spec.band_high;
  }
  const double inv = 1.0 / static_cast<double>(keep);
  sel.spec = {mean.window_start * inv, mean.window_end * inv, mean.band_low * inv, mean.band_high * inv};
  return sel;
}

}  // namespace spd
