#pragma once

// Deterministic synthetic data: SPD class clouds and multichannel trials.

#include <cstdint>
#include <string>
#include <vector>

#include "spd/dplm.hpp"
#include "spd/pipeline.hpp"

namespace spd {

enum class SynthStructure { Isotropic, BlockDiscriminative };

std::string to_string(SynthStructure s);
SynthStructure parse_structure(std::string_view name);

struct SyntheticSpec {
  int n_classes = 2;
  int per_class = 20;
  int test_per_class = 0;
  Eigen::Index dim = 10;
  /// Informative leading block size (block-discriminative only).
  Eigen::Index block_dim = 4;
  /// AIRM distance of each class center from the identity.
  double separation = 1.0;
  /// Typical AIRM distance of a sample from its class center.
  double noise = 0.1;
  SynthStructure structure = SynthStructure::Isotropic;
  /// Block-discriminative only: hide the block behind a seeded rotation R,
  /// X = R blockdiag(B, I) R^T.
  bool rotate = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticDataset {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
  std::vector<SpdMatrix> centers;
  /// Rotation applied to every sample (identity when not rotated).
  Matrix rotation;
};

SyntheticDataset synthesize(const SyntheticSpec& spec);

/// Random symmetric matrix with E||S||_F^2 = 1.
SymMatrix random_symmetric(Eigen::Index dim, std::uint64_t seed);

struct TrialSynthSpec {
  int n_classes = 2;
  int per_class = 30;
  Eigen::Index channels = 6;
  double sample_rate = 128.0;
  double duration = 8.0;
  /// Class-dependent band-limited source lives in this band and time span.
  double source_low = 10.0;
  double source_high = 20.0;
  double active_start = 3.0;
  double active_end = 5.0;
  /// When positive, each trial carries a single burst of this length placed
  /// uniformly at random inside the active span; otherwise the source spans
  /// the whole active interval.
  double burst_length = 0.5;
  double source_amplitude = 1.0;
  /// Per-trial spread of the source amplitude (log-normal sigma).
  double amplitude_jitter = 0.3;
  /// Broadband background noise standard deviation.
  double noise = 1.0;
  /// Strength of class-independent rhythms at 6 Hz and 32 Hz.
  double nuisance = 0.5;
  /// Class-independent activity in the source band and the class pattern
  /// directions outside the active span, with a random per-trial mix.
  double idle_activity = 0.5;
  std::uint64_t seed = 0;
};

std::vector<TrialSignal> synthesize_trials(const TrialSynthSpec& spec);

}  // namespace spd
