#include "spd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace spd {

namespace {

using Rng = std::mt19937_64;

SymMatrix random_symmetric(Eigen::Index dim, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0 / static_cast<double>(dim));
  Matrix m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = i; j < dim; ++j) m(i, j) = m(j, i) = gauss(rng);
  }
  return SymMatrix(m);
}

Matrix random_rotation(Eigen::Index dim, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) g(i, j) = gauss(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

Vector random_unit(Eigen::Index dim, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = gauss(rng);
  return v / v.norm();
}

/// Geodesic perturbation C^{1/2} exp(S) C^{1/2}.
Matrix perturb(const SpdMatrix& center, const SymMatrix& s) {
  return tangent_exp(center, SymMatrix(linalg::symmetrized(
                                 spd_sqrt(center).matrix() * s.matrix() * spd_sqrt(center).matrix())))
      .matrix();
}

Matrix embed(const Matrix& block, Eigen::Index dim, const Matrix& rotation) {
  Matrix full = Matrix::Identity(dim, dim);
  full.topLeftCorner(block.rows(), block.cols()) = block;
  return linalg::symmetrized(rotation * full * rotation.transpose());
}

}  // namespace

std::string to_string(SynthStructure s) {
  return s == SynthStructure::Isotropic ? "isotropic" : "block";
}

SynthStructure parse_structure(std::string_view name) {
  if (name == "isotropic") return SynthStructure::Isotropic;
  if (name == "block" || name == "block-discriminative") return SynthStructure::BlockDiscriminative;
  throw ConfigError("unknown structure '" + std::string(name) + "' (expected isotropic or block)");
}

void SyntheticSpec::validate() const {
  if (n_classes < 1) throw ConfigError("synth: n_classes must be positive");
  if (per_class < 1) throw ConfigError("synth: per_class must be positive");
  if (test_per_class < 0) throw ConfigError("synth: test_per_class must be non-negative");
  if (dim < 1) throw ConfigError("synth: dim must be positive");
  if (structure == SynthStructure::BlockDiscriminative && (block_dim < 1 || block_dim > dim)) {
    throw ConfigError("synth: block_dim must lie in [1, dim]");
  }
  if (!(separation >= 0.0) || !(noise >= 0.0)) throw ConfigError("synth: scales must be non-negative");
}

SymMatrix random_symmetric(Eigen::Index dim, std::uint64_t seed) {
  Rng rng(seed);
  return random_symmetric(dim, rng);
}

SyntheticDataset synthesize(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const bool block = spec.structure == SynthStructure::BlockDiscriminative;
  const Eigen::Index latent = block ? spec.block_dim : spec.dim;

  SyntheticDataset ds;
  ds.rotation = (block && spec.rotate) ? random_rotation(spec.dim, rng) : Matrix::Identity(spec.dim, spec.dim);

  std::vector<SpdMatrix> latent_centers;
  for (int c = 0; c < spec.n_classes; ++c) {
    const SymMatrix dir = random_symmetric(latent, rng);
    const double norm = dir.matrix().norm();
    const Matrix scaled = norm > 0.0 ? Matrix(dir.matrix() * (spec.separation / norm)) : Matrix(dir.matrix());
    latent_centers.push_back(spd_exp(SymMatrix(scaled)));
  }
  for (const auto& c : latent_centers) {
    ds.centers.emplace_back(block ? embed(c.matrix(), spec.dim, ds.rotation) : c.matrix());
  }

  auto draw = [&](int per_class, std::vector<LabeledSample>& out) {
    for (int c = 0; c < spec.n_classes; ++c) {
      for (int k = 0; k < per_class; ++k) {
        const SymMatrix e = random_symmetric(latent, rng);
        if (spec.noise == 0.0) {
          out.push_back({ds.centers[static_cast<std::size_t>(c)], c});
          continue;
        }
        const Matrix b = perturb(latent_centers[static_cast<std::size_t>(c)],
                                 SymMatrix(Matrix(spec.noise * e.matrix())));
        out.push_back({SpdMatrix(block ? embed(b, spec.dim, ds.rotation) : b), c});
      }
    }
  };
  draw(spec.per_class, ds.train);
  draw(spec.test_per_class, ds.test);
  return ds;
}

std::vector<TrialSignal> synthesize_trials(const TrialSynthSpec& spec) {
  if (spec.n_classes < 1 || spec.per_class < 1 || spec.channels < 1) {
    throw ConfigError("synth trials: counts must be positive");
  }
  if (!(spec.sample_rate > 0.0) || !(spec.duration > 0.0)) {
    throw ConfigError("synth trials: sample rate and duration must be positive");
  }
  Rng rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  const auto length = static_cast<Eigen::Index>(std::llround(spec.duration * spec.sample_rate));
  const Eigen::Index ch = spec.channels;

  Matrix mixing(ch, ch);
  for (Eigen::Index i = 0; i < ch; ++i) {
    for (Eigen::Index j = 0; j < ch; ++j) mixing(i, j) = gauss(rng) / std::sqrt(static_cast<double>(ch));
  }
  mixing += Matrix::Identity(ch, ch);
  // Orthonormal class patterns while there are enough channels.
  const Matrix basis = random_rotation(ch, rng);
  std::vector<Vector> patterns;
  for (int c = 0; c < spec.n_classes; ++c) {
    patterns.push_back(c < ch ? Vector(basis.col(c)) : random_unit(ch, rng));
  }

  if (!(spec.active_end > spec.active_start)) throw ConfigError("synth trials: empty active span");
  if (spec.active_start < 0.0 || spec.active_end > spec.duration) {
    throw ConfigError("synth trials: active span must lie inside the trial");
  }
  if (spec.burst_length > spec.active_end - spec.active_start) {
    throw ConfigError("synth trials: burst longer than the active span");
  }

  // Idle activity stays this far away from the active span.
  constexpr double kIdleGuard = 0.5;

  // Cosine ramps of 0.1 s inside [begin, end].
  const double ramp = 0.1;
  auto envelope = [&](double t, double begin, double end) {
    if (t < begin || t > end) return 0.0;
    const double edge = std::min(t - begin, end - t);
    if (edge >= ramp) return 1.0;
    return 0.5 - 0.5 * std::cos(std::numbers::pi * edge / ramp);
  };

  std::vector<TrialSignal> trials;
  for (int k = 0; k < spec.per_class; ++k) {
    for (int c = 0; c < spec.n_classes; ++c) {
      Matrix white(ch, length);
      for (Eigen::Index j = 0; j < length; ++j) {
        for (Eigen::Index i = 0; i < ch; ++i) white(i, j) = gauss(rng);
      }
      Matrix data = spec.noise * mixing * white;

      constexpr int kComponents = 8;
      std::vector<double> freq(kComponents), phase(kComponents);
      for (int q = 0; q < kComponents; ++q) {
        freq[static_cast<std::size_t>(q)] = spec.source_low + (spec.source_high - spec.source_low) * unif(rng);
        phase[static_cast<std::size_t>(q)] = two_pi * unif(rng);
      }
      const double amp = spec.source_amplitude * std::exp(spec.amplitude_jitter * gauss(rng)) *
                         std::sqrt(2.0 / kComponents);
      double burst_begin = spec.active_start;
      double burst_end = spec.active_end;
      if (spec.burst_length > 0.0) {
        burst_begin += (spec.active_end - spec.active_start - spec.burst_length) * unif(rng);
        burst_end = burst_begin + spec.burst_length;
      }
      Vector idle = Vector::Zero(ch);
      for (const Vector& p : patterns) idle += p * (spec.idle_activity * gauss(rng));
      std::vector<double> idle_freq(kComponents), idle_phase(kComponents);
      for (int q = 0; q < kComponents; ++q) {
        idle_freq[static_cast<std::size_t>(q)] = spec.source_low + (spec.source_high - spec.source_low) * unif(rng);
        idle_phase[static_cast<std::size_t>(q)] = two_pi * unif(rng);
      }
      const Vector nuisance_a = random_unit(ch, rng);
      const Vector nuisance_b = random_unit(ch, rng);
      const double phase_a = two_pi * unif(rng);
      const double phase_b = two_pi * unif(rng);

      for (Eigen::Index j = 0; j < length; ++j) {
        const double t = static_cast<double>(j) / spec.sample_rate;
        double s = 0.0;
        for (int q = 0; q < kComponents; ++q) {
          s += std::sin(two_pi * freq[static_cast<std::size_t>(q)] * t + phase[static_cast<std::size_t>(q)]);
        }
        double r = 0.0;
        for (int q = 0; q < kComponents; ++q) {
          r += std::sin(two_pi * idle_freq[static_cast<std::size_t>(q)] * t + idle_phase[static_cast<std::size_t>(q)]);
        }
        const double burst = envelope(t, burst_begin, burst_end);
        const double idle_env = 1.0 - envelope(t, spec.active_start - kIdleGuard, spec.active_end + kIdleGuard);
        data.col(j) += patterns[static_cast<std::size_t>(c)] * (amp * burst * s);
        data.col(j) += idle * (std::sqrt(2.0 / kComponents) * idle_env * r);
        data.col(j) += spec.nuisance * (nuisance_a * std::sin(two_pi * 6.0 * t + phase_a) +
                                        nuisance_b * std::sin(two_pi * 32.0 * t + phase_b));
      }
      trials.push_back({std::move(data), spec.sample_rate, c, 0.0});
    }
  }
  return trials;
}

}  // namespace spd
