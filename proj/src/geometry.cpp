#include "spd/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>

namespace spd {

namespace {

void require_same_dim(const SpdMatrix& x, const SpdMatrix& y, const char* what) {
  if (x.dim() != y.dim()) {
    throw DimensionMismatch(std::string(what) + ": dimensions " + std::to_string(x.dim()) +
                            " and " + std::to_string(y.dim()) + " differ");
  }
}

struct Whitening {
  Matrix sqrt;
  Matrix inv_sqrt;
};

Whitening whitening(const EigenDecomposition& e) {
  return {linalg::spectral_apply(e, [](double v) { return std::sqrt(v); }),
          linalg::spectral_apply(e, [](double v) { return 1.0 / std::sqrt(v); })};
}

EigenDecomposition eig_of(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(linalg::symmetrized(symmetric));
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// log of the whitened point P^{-1/2} X P^{-1/2}, plus its squared norm.
struct WhitenedLog {
  Matrix log;
  double norm_sq;
};

WhitenedLog whitened_log(const Matrix& inv_sqrt, const Matrix& x) {
  const EigenDecomposition e = eig_of(inv_sqrt * x * inv_sqrt);
  if (!(e.values(0) > 0.0)) throw NotPositiveDefinite("karcher_mean: whitened point lost definiteness");
  const Vector logs = e.values.array().log().matrix();
  return {e.vectors * logs.asDiagonal() * e.vectors.transpose(), logs.squaredNorm()};
}

}  // namespace

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::Airm:
      return "airm";
    case MetricKind::LogDet:
      return "logdet";
  }
  return "unknown";
}

MetricKind parse_metric(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "airm") return MetricKind::Airm;
  if (lower == "logdet" || lower == "jbld") return MetricKind::LogDet;
  throw ConfigError("unknown metric '" + std::string(name) + "' (expected airm or logdet)");
}

void KarcherConfig::validate() const {
  if (max_iterations < 1) throw ConfigError("karcher: max_iterations must be positive");
  if (!(tolerance > 0.0)) throw ConfigError("karcher: tolerance must be positive");
  if (!(step_size > 0.0 && step_size <= 1.0)) throw ConfigError("karcher: step_size must lie in (0, 1]");
}

KarcherNotConverged::KarcherNotConverged(SpdMatrix last_iterate, double residual, int iterations)
    : NumericalError("karcher_mean did not converge after " + std::to_string(iterations) +
                     " iterations (residual " + std::to_string(residual) + ")"),
      last_(std::move(last_iterate)),
      residual_(residual),
      iterations_(iterations) {}

double airm_sq(const SpdMatrix& x, const SpdMatrix& y) {
  require_same_dim(x, y, "airm_sq");
  if (x == y) return 0.0;
  const Matrix y_inv_sqrt =
      linalg::spectral_apply(y.eig(), [](double v) { return 1.0 / std::sqrt(v); });
  const EigenDecomposition e = eig_of(y_inv_sqrt * x.matrix() * y_inv_sqrt);
  return e.values.array().log().square().sum();
}

double jbld(const SpdMatrix& x, const SpdMatrix& y) {
  require_same_dim(x, y, "jbld");
  if (x == y) return 0.0;
  const Matrix mid = 0.5 * (x.matrix() + y.matrix());
  const double j = linalg::logdet_chol(mid) -
                   0.5 * (linalg::logdet_chol(x.matrix()) + linalg::logdet_chol(y.matrix()));
  return std::max(j, 0.0);
}

double logdet_metric(const SpdMatrix& x, const SpdMatrix& y) { return std::sqrt(jbld(x, y)); }

double squared_distance(MetricKind kind, const SpdMatrix& x, const SpdMatrix& y) {
  return kind == MetricKind::Airm ? airm_sq(x, y) : jbld(x, y);
}

double distance(MetricKind kind, const SpdMatrix& x, const SpdMatrix& y) {
  return std::sqrt(squared_distance(kind, x, y));
}

namespace geometry {

std::uint64_t content_hash(const Matrix& m) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
  const std::size_t len = static_cast<std::size_t>(m.size()) * sizeof(double);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::size_t> canonical_order(std::span<const SpdMatrix> points) {
  std::vector<std::uint64_t> hashes;
  hashes.reserve(points.size());
  for (const auto& p : points) hashes.push_back(content_hash(p.matrix()));
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (hashes[a] != hashes[b]) return hashes[a] < hashes[b];
    const Matrix& ma = points[a].matrix();
    const Matrix& mb = points[b].matrix();
    return std::lexicographical_compare(ma.data(), ma.data() + ma.size(), mb.data(),
                                        mb.data() + mb.size());
  });
  return order;
}

}  // namespace geometry

KarcherResult karcher_mean_detailed(std::span<const SpdMatrix> points, const KarcherConfig& cfg) {
  cfg.validate();
  if (points.empty()) throw ValidationError("karcher_mean: empty point set");
  const Eigen::Index n = points.front().dim();
  for (const auto& p : points) {
    if (p.dim() != n) throw DimensionMismatch("karcher_mean: points have different dimensions");
  }
  if (std::all_of(points.begin(), points.end(),
                  [&](const SpdMatrix& p) { return p == points.front(); })) {
    return {points.front(), 0, 0.0};
  }

  const std::vector<std::size_t> order = geometry::canonical_order(points);
  const double inv_count = 1.0 / static_cast<double>(points.size());

  Matrix mean = Matrix::Zero(n, n);
  for (std::size_t idx : order) mean += points[idx].matrix();
  mean *= inv_count;

  // Tangent mean and objective at a candidate, both in whitened coordinates.
  auto evaluate = [&](const Matrix& inv_sqrt, Matrix& tangent) {
    tangent.setZero(n, n);
    double objective = 0.0;
    for (std::size_t idx : order) {
      WhitenedLog wl = whitened_log(inv_sqrt, points[idx].matrix());
      tangent += wl.log;
      objective += wl.norm_sq;
    }
    tangent *= inv_count;
    return objective;
  };

  EigenDecomposition e = eig_of(mean);
  Whitening w = whitening(e);
  Matrix tangent;
  double objective = evaluate(w.inv_sqrt, tangent);

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    const double residual = tangent.norm();
    if (residual < cfg.tolerance) return {SpdMatrix(mean), iter, residual};

    double step = cfg.step_size;
    Matrix cand_mean;
    EigenDecomposition cand_eig;
    Whitening cand_w;
    Matrix cand_tangent;
    double cand_objective = 0.0;
    for (int halving = 0; halving <= 10; ++halving) {
      const Matrix expo = linalg::spectral_apply(eig_of(step * tangent),
                                                 [](double v) { return std::exp(v); });
      cand_mean = linalg::symmetrized(w.sqrt * expo * w.sqrt);
      cand_eig = eig_of(cand_mean);
      if (!(cand_eig.values(0) > 0.0)) throw NotPositiveDefinite("karcher_mean: iterate lost definiteness");
      cand_w = whitening(cand_eig);
      cand_objective = evaluate(cand_w.inv_sqrt, cand_tangent);
      if (cand_objective <= objective) break;
      step *= 0.5;
    }
    mean = std::move(cand_mean);
    w = std::move(cand_w);
    tangent = std::move(cand_tangent);
    objective = cand_objective;
  }
  const double residual = tangent.norm();
  if (residual < cfg.tolerance) return {SpdMatrix(mean), cfg.max_iterations, residual};
  throw KarcherNotConverged(SpdMatrix(mean), residual, cfg.max_iterations);
}

SpdMatrix karcher_mean(std::span<const SpdMatrix> points, const KarcherConfig& cfg) {
  return karcher_mean_detailed(points, cfg).mean;
}

SymMatrix tangent_log(const SpdMatrix& base, const SpdMatrix& x) {
  require_same_dim(base, x, "tangent_log");
  if (base == x) return SymMatrix::zero(base.dim());
  const Whitening w = whitening(base.eig());
  const EigenDecomposition e = eig_of(w.inv_sqrt * x.matrix() * w.inv_sqrt);
  const Matrix log = linalg::spectral_apply(e, [](double v) { return std::log(v); });
  return SymMatrix(linalg::symmetrized(w.sqrt * log * w.sqrt));
}

SpdMatrix tangent_exp(const SpdMatrix& base, const SymMatrix& s) {
  if (base.dim() != s.dim()) throw DimensionMismatch("tangent_exp: dimensions differ");
  const Whitening w = whitening(base.eig());
  const EigenDecomposition e = eig_of(w.inv_sqrt * s.matrix() * w.inv_sqrt);
  const Matrix expo = linalg::spectral_apply(e, [](double v) { return std::exp(v); });
  return SpdMatrix(linalg::symmetrized(w.sqrt * expo * w.sqrt));
}

}  // namespace spd
