#include "spd/dplm.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <exception>
#include <map>
#include <random>

namespace spd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

Matrix cayley_curve(const Matrix& u, const Matrix& a, double tau) {
  const Eigen::Index n = u.rows();
  const Matrix half = (0.5 * tau) * a;
  const Matrix lhs = Matrix::Identity(n, n) + half;
  const Matrix rhs = u - half * u;
  return Eigen::PartialPivLU<Matrix>(lhs).solve(rhs);
}

/// Riemannian gradient under the canonical metric: G - U G^T U.
Matrix riemannian_gradient(const Matrix& u, const Matrix& g) {
  return g - u * (g.transpose() * u);
}

Matrix reorthonormalize(const Matrix& u) {
  Eigen::HouseholderQR<Matrix> qr(u);
  Matrix q = qr.householderQ() * Matrix::Identity(u.rows(), u.cols());
  // Fix column signs so the rescue stays close to u.
  const Matrix r = qr.matrixQR().topRows(u.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

}  // namespace

std::string to_string(InitKind kind) {
  return kind == InitKind::CoordinateSelection ? "coordinate" : "random";
}

std::string to_string(KernelBackend backend) {
  return backend == KernelBackend::Parallel ? "parallel" : "serial";
}

std::string to_string(FitStatus status) {
  switch (status) {
    case FitStatus::Converged:
      return "converged";
    case FitStatus::MaxIterations:
      return "max_iterations";
    case FitStatus::Stalled:
      return "stalled";
  }
  return "unknown";
}

InitKind parse_init(std::string_view name) {
  const std::string s = lower(name);
  if (s == "coordinate") return InitKind::CoordinateSelection;
  if (s == "random") return InitKind::RandomOrthonormal;
  throw ConfigError("unknown init '" + std::string(name) + "' (expected coordinate or random)");
}

KernelBackend parse_backend(std::string_view name) {
  const std::string s = lower(name);
  if (s == "parallel") return KernelBackend::Parallel;
  if (s == "serial") return KernelBackend::Serial;
  throw ConfigError("unknown backend '" + std::string(name) + "' (expected parallel or serial)");
}

FitStatus parse_status(std::string_view name) {
  const std::string s = lower(name);
  if (s == "converged") return FitStatus::Converged;
  if (s == "max_iterations") return FitStatus::MaxIterations;
  if (s == "stalled") return FitStatus::Stalled;
  throw DataError("unknown fit status '" + std::string(name) + "'");
}

void DplmConfig::validate(Eigen::Index ambient_dim) const {
  if (target_dim < 1 || target_dim > ambient_dim) {
    throw ConfigError("target dimension m=" + std::to_string(target_dim) +
                      " must satisfy 1 <= m <= n=" + std::to_string(ambient_dim));
  }
  if (k_neighbors < 1) throw ConfigError("k_neighbors must be at least 1");
  if (max_outer_iterations < 1) throw ConfigError("max_outer_iterations must be positive");
  if (!(grad_norm_tol > 0.0)) throw ConfigError("grad_norm_tol must be positive");
  if (!(initial_step > 0.0)) throw ConfigError("initial_step must be positive");
  if (!(contraction > 0.0 && contraction < 1.0)) throw ConfigError("contraction must lie in (0, 1)");
  if (!(sufficient_decrease > 0.0 && sufficient_decrease < 1.0)) {
    throw ConfigError("sufficient_decrease must lie in (0, 1)");
  }
  if (nonmonotone_window < 1) throw ConfigError("nonmonotone_window must be at least 1");
  if (max_contractions < 1) throw ConfigError("max_contractions must be at least 1");
  karcher.validate();
}

// ---- problem ---------------------------------------------------------------

DplmProblem::DplmProblem(std::span<const LabeledSample> samples,
                         std::span<const Neighborhood> hoods) {
  if (samples.empty()) throw ValidationError("DPLM problem needs at least one sample");
  ambient_dim_ = samples.front().matrix.dim();
  samples_.reserve(samples.size());
  std::vector<double> sample_logdet;
  sample_logdet.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.matrix.dim() != ambient_dim_) throw DimensionMismatch("samples have different dimensions");
    samples_.push_back(s.matrix.matrix());
    sample_logdet.push_back(linalg::logdet_chol(s.matrix.matrix()));
  }
  offsets_.push_back(0);
  for (std::size_t i = 0; i < hoods.size(); ++i) {
    const Neighborhood& h = hoods[i];
    if (h.local_mean.dim() != ambient_dim_) throw DimensionMismatch("local mean dimension differs");
    means_.push_back(h.local_mean.matrix());
    const double mean_logdet = linalg::logdet_chol(h.local_mean.matrix());
    for (std::size_t j = 0; j < h.neighbors.size(); ++j) {
      const std::size_t s = h.neighbors[j];
      if (s >= samples_.size()) throw ValidationError("neighbor index out of range");
      const double original =
          kernels::jbld_raw(samples_[s], means_.back(), sample_logdet[s], mean_logdet);
      pairs_.push_back({s, i, j, original});
    }
    offsets_.push_back(pairs_.size());
  }
}

kernels::ProblemView DplmProblem::view() const { return {samples_, means_, pairs_, offsets_}; }

double DplmProblem::objective(const Matrix& u, KernelBackend backend) const {
  if (u.rows() != ambient_dim_) throw DimensionMismatch("U row count differs from sample dimension");
  return backend == KernelBackend::Parallel ? kernels::parallel_objective(view(), u)
                                            : kernels::serial_objective(view(), u);
}

kernels::Evaluation DplmProblem::evaluate(const Matrix& u, KernelBackend backend) const {
  if (u.rows() != ambient_dim_) throw DimensionMismatch("U row count differs from sample dimension");
  return backend == KernelBackend::Parallel ? kernels::parallel_evaluate(view(), u)
                                            : kernels::serial_evaluate(view(), u);
}

// ---- neighborhoods -----------------------------------------------------------

std::vector<Neighborhood> build_neighborhoods(std::span<const LabeledSample> samples,
                                              const DplmConfig& cfg) {
  if (samples.empty()) throw ValidationError("build_neighborhoods: no samples");
  const Eigen::Index n = samples.front().matrix.dim();
  for (const auto& s : samples) {
    if (s.matrix.dim() != n) throw DimensionMismatch("build_neighborhoods: mixed dimensions");
  }
  const auto k = static_cast<std::size_t>(cfg.k_neighbors);
  if (k < 1) throw ConfigError("k_neighbors must be at least 1");

  if (cfg.supervised) {
    std::map<Label, std::size_t> counts;
    for (const auto& s : samples) ++counts[s.label];
    for (const auto& [label, count] : counts) {
      if (count <= k) {
        throw ConfigError("class " + std::to_string(label) + " has " + std::to_string(count) +
                          " samples; supervised neighborhoods need more than K=" +
                          std::to_string(k));
      }
    }
  } else if (samples.size() < k + 1) {
    throw ConfigError("need at least K+1=" + std::to_string(k + 1) + " samples, got " +
                      std::to_string(samples.size()));
  }

  std::vector<double> logdets(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    logdets[i] = linalg::logdet_chol(samples[i].matrix.matrix());
  }

  const auto count = static_cast<std::ptrdiff_t>(samples.size());
  std::vector<std::vector<std::size_t>> chosen(samples.size());
  std::vector<std::exception_ptr> errors(samples.size());

#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      std::vector<std::pair<double, std::size_t>> cand;
      cand.reserve(samples.size());
      for (std::size_t c = 0; c < samples.size(); ++c) {
        if (c == i) continue;
        if (cfg.supervised && samples[c].label != samples[i].label) continue;
        double d = 0.0;
        if (cfg.neighbor_metric == MetricKind::LogDet) {
          d = kernels::jbld_raw(samples[i].matrix.matrix(), samples[c].matrix.matrix(),
                                logdets[i], logdets[c]);
        } else {
          d = airm_sq(samples[i].matrix, samples[c].matrix);
        }
        cand.emplace_back(d, c);
      }
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
      for (std::size_t j = 0; j < k; ++j) chosen[i].push_back(cand[j].second);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<Neighborhood> hoods;
  hoods.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::vector<SpdMatrix> members;
    members.reserve(k);
    for (std::size_t idx : chosen[i]) members.push_back(samples[idx].matrix);
    hoods.push_back({i, chosen[i], karcher_mean(members, cfg.karcher)});
  }
  return hoods;
}

double objective(const StiefelPoint& u, std::span<const Neighborhood> hoods,
                 std::span<const LabeledSample> samples) {
  return DplmProblem(samples, hoods).objective(u.matrix());
}

Matrix gradient(const StiefelPoint& u, std::span<const Neighborhood> hoods,
                std::span<const LabeledSample> samples) {
  return DplmProblem(samples, hoods).evaluate(u.matrix()).gradient;
}

// ---- optimizer ---------------------------------------------------------------

Matrix skew_direction(const Matrix& u, const Matrix& g) {
  if (u.rows() != g.rows() || u.cols() != g.cols()) {
    throw DimensionMismatch("gradient shape differs from U");
  }
  return g * u.transpose() - u * g.transpose();
}

StiefelPoint cayley_step(const StiefelPoint& u, const Matrix& g, double tau) {
  if (!(tau >= 0.0)) throw ValidationError("cayley_step: tau must be non-negative");
  if (tau == 0.0) return u;
  return StiefelPoint(cayley_curve(u.matrix(), skew_direction(u.matrix(), g), tau));
}

StiefelPoint initial_projection(Eigen::Index n, const DplmConfig& cfg) {
  if (cfg.init == InitKind::CoordinateSelection) {
    return StiefelPoint::coordinate_selection(n, cfg.target_dim);
  }
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix draw(n, cfg.target_dim);
  for (Eigen::Index j = 0; j < draw.cols(); ++j) {
    for (Eigen::Index i = 0; i < draw.rows(); ++i) draw(i, j) = gauss(rng);
  }
  return StiefelPoint(reorthonormalize(draw));
}

DplmModel fit(std::span<const LabeledSample> samples, const DplmConfig& cfg) {
  if (samples.empty()) throw ValidationError("fit: no samples");
  const Eigen::Index n = samples.front().matrix.dim();
  cfg.validate(n);

  TrainingReport report;
  const auto t_hoods = Clock::now();
  const std::vector<Neighborhood> hoods = build_neighborhoods(samples, cfg);
  const DplmProblem problem(samples, hoods);
  report.neighborhood_seconds = seconds_since(t_hoods);

  const auto t_opt = Clock::now();
  Matrix u = initial_projection(n, cfg).matrix();
  kernels::Evaluation ev = problem.evaluate(u, cfg.backend);
  ++report.objective_evaluations;
  Matrix rgrad = riemannian_gradient(u, ev.gradient);
  report.initial_objective = ev.objective;
  report.initial_grad_norm = rgrad.norm();

  Matrix best_u = u;
  double best_obj = ev.objective;
  std::deque<double> window{ev.objective};
  double tau = cfg.initial_step;
  report.status = FitStatus::MaxIterations;

  for (int iter = 1; iter <= cfg.max_outer_iterations; ++iter) {
    if (ev.objective == 0.0 || rgrad.norm() < cfg.grad_norm_tol) {
      report.status = FitStatus::Converged;
      break;
    }
    const auto t_iter = Clock::now();
    const Matrix a = skew_direction(u, ev.gradient);
    const double a_sq = a.squaredNorm();
    const double reference = *std::max_element(window.begin(), window.end());

    Matrix trial;
    double trial_obj = 0.0;
    int contractions = 0;
    bool accepted = false;
    while (true) {
      trial = cayley_curve(u, a, tau);
      trial_obj = problem.objective(trial, cfg.backend);
      ++report.objective_evaluations;
      if (trial_obj <= reference - cfg.sufficient_decrease * tau * a_sq) {
        accepted = true;
        break;
      }
      if (contractions == cfg.max_contractions) break;
      tau *= cfg.contraction;
      ++contractions;
    }
    if (!accepted) {
      report.status = FitStatus::Stalled;
      break;
    }

    double feas = orthonormality_error(trial);
    if (feas >= kStiefelTolerance) {
      trial = reorthonormalize(trial);
      feas = orthonormality_error(trial);
      ++report.qr_rescues;
    }

    kernels::Evaluation next = problem.evaluate(trial, cfg.backend);
    ++report.objective_evaluations;
    const Matrix next_rgrad = riemannian_gradient(trial, next.gradient);

    IterationRecord rec;
    rec.iteration = iter;
    rec.objective = next.objective;
    rec.reference = reference;
    rec.step = tau;
    rec.skew_norm_sq = a_sq;
    rec.grad_norm = next_rgrad.norm();
    rec.feasibility = feas;
    rec.contractions = contractions;

    // Barzilai-Borwein seed for the next line search, alternating the two forms.
    const Matrix s = trial - u;
    const Matrix y = next_rgrad - rgrad;
    const double sy = std::abs((s.array() * y.array()).sum());
    double bb = 0.0;
    if (sy > 0.0) {
      bb = (iter % 2 == 1) ? s.squaredNorm() / sy : sy / y.squaredNorm();
    }
    tau = (std::isfinite(bb) && bb > 0.0) ? std::clamp(bb, 1e-20, 1e20) : cfg.initial_step;

    u = std::move(trial);
    ev = std::move(next);
    rgrad = next_rgrad;
    if (ev.objective < best_obj) {
      best_obj = ev.objective;
      best_u = u;
    }
    window.push_back(ev.objective);
    while (static_cast<int>(window.size()) > cfg.nonmonotone_window) window.pop_front();

    rec.seconds = seconds_since(t_iter);
    report.iterations.push_back(rec);
  }
  if (report.status == FitStatus::MaxIterations &&
      (ev.objective == 0.0 || rgrad.norm() < cfg.grad_norm_tol)) {
    report.status = FitStatus::Converged;
  }
  report.optimize_seconds = seconds_since(t_opt);
  report.final_objective = best_obj;

  return DplmModel{StiefelPoint(best_u), cfg.k_neighbors, std::move(report)};
}

SpdMatrix transform(const DplmModel& model, const SpdMatrix& x) {
  return congruence(x, model.projection);
}

}  // namespace spd
