#pragma once

// Distance preservation to local mean: supervised neighborhoods, their
// Karcher means, and an orthogonality-constrained projection U that keeps
// every J(X_ij, mean_i) unchanged after X -> U^T X U.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spd/geometry.hpp"
#include "spd/kernels.hpp"
#include "spd/linalg.hpp"

namespace spd {

using Label = int;

struct LabeledSample {
  SpdMatrix matrix;
  Label label = 0;
};

struct Neighborhood {
  std::size_t owner = 0;
  std::vector<std::size_t> neighbors;
  SpdMatrix local_mean;
};

enum class InitKind { CoordinateSelection, RandomOrthonormal };
enum class KernelBackend { Parallel, Serial };
enum class FitStatus { Converged, MaxIterations, Stalled };

std::string to_string(InitKind kind);
std::string to_string(KernelBackend backend);
std::string to_string(FitStatus status);
InitKind parse_init(std::string_view name);
KernelBackend parse_backend(std::string_view name);
FitStatus parse_status(std::string_view name);

struct DplmConfig {
  Eigen::Index target_dim = 2;
  int k_neighbors = 5;
  bool supervised = true;
  MetricKind neighbor_metric = MetricKind::LogDet;
  int max_outer_iterations = 200;
  double grad_norm_tol = 1e-5;
  double initial_step = 1e-3;
  double contraction = 0.5;          // rho
  double sufficient_decrease = 1e-4;  // c
  int nonmonotone_window = 5;
  int max_contractions = 30;
  InitKind init = InitKind::CoordinateSelection;
  std::uint64_t seed = 0;
  KernelBackend backend = KernelBackend::Parallel;
  KarcherConfig karcher;

  /// Throws ConfigError unless 1 <= m < n (m == n is accepted as the
  /// degenerate identity problem) and every numeric field is in range.
  void validate(Eigen::Index ambient_dim) const;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double reference = 0.0;    // nonmonotone reference max over the window
  double step = 0.0;         // accepted tau
  double skew_norm_sq = 0.0;  // ||A||_F^2 at the start of the iteration
  double grad_norm = 0.0;     // ||G - U G^T U||_F at the accepted point
  double feasibility = 0.0;   // ||U^T U - I||_F at the accepted point
  int contractions = 0;
  double seconds = 0.0;
};

struct TrainingReport {
  double initial_objective = 0.0;
  double initial_grad_norm = 0.0;
  double final_objective = 0.0;
  FitStatus status = FitStatus::MaxIterations;
  int qr_rescues = 0;
  int objective_evaluations = 0;
  double neighborhood_seconds = 0.0;
  double optimize_seconds = 0.0;
  std::vector<IterationRecord> iterations;
};

struct DplmModel {
  StiefelPoint projection;
  int k_neighbors = 0;
  TrainingReport report;
};

/// Neighborhoods plus the ambient-space distances, which stay fixed during
/// optimization.
class DplmProblem {
 public:
  DplmProblem(std::span<const LabeledSample> samples, std::span<const Neighborhood> hoods);

  Eigen::Index ambient_dim() const { return ambient_dim_; }
  std::size_t pair_count() const { return pairs_.size(); }
  kernels::ProblemView view() const;

  double objective(const Matrix& u, KernelBackend backend = KernelBackend::Parallel) const;
  kernels::Evaluation evaluate(const Matrix& u,
                               KernelBackend backend = KernelBackend::Parallel) const;

 private:
  Eigen::Index ambient_dim_ = 0;
  std::vector<Matrix> samples_;
  std::vector<Matrix> means_;
  std::vector<kernels::PairTerm> pairs_;
  std::vector<std::size_t> offsets_;
};

std::vector<Neighborhood> build_neighborhoods(std::span<const LabeledSample> samples,
                                              const DplmConfig& cfg);

double objective(const StiefelPoint& u, std::span<const Neighborhood> hoods,
                 std::span<const LabeledSample> samples);

/// Euclidean gradient dH/dU (n x m).
Matrix gradient(const StiefelPoint& u, std::span<const Neighborhood> hoods,
                std::span<const LabeledSample> samples);

/// Skew matrix A = G U^T - U G^T.
Matrix skew_direction(const Matrix& u, const Matrix& g);

/// Point on the Cayley curve Y(tau) = (I + tau/2 A)^{-1} (I - tau/2 A) U with
/// A = G U^T - U G^T, so Y(0) = U and Y'(0) = -A U.
StiefelPoint cayley_step(const StiefelPoint& u, const Matrix& g, double tau);

/// Seeded initial projection.
StiefelPoint initial_projection(Eigen::Index n, const DplmConfig& cfg);

DplmModel fit(std::span<const LabeledSample> samples, const DplmConfig& cfg);

/// U^T X U.
SpdMatrix transform(const DplmModel& model, const SpdMatrix& x);

}  // namespace spd
