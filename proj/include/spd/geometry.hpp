#pragma once

// Metrics, divergences and the Karcher mean on the SPD manifold.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spd/linalg.hpp"

namespace spd {

enum class MetricKind { Airm, LogDet };

std::string to_string(MetricKind kind);
/// Accepts "airm" or "logdet" (case-insensitive).
MetricKind parse_metric(std::string_view name);

struct KarcherConfig {
  int max_iterations = 50;
  /// Frobenius norm of the whitened mean tangent vector.
  double tolerance = 1e-9;
  double step_size = 1.0;

  void validate() const;
};

/// Thrown when the fixed-point iteration runs out of iterations.
class KarcherNotConverged : public NumericalError {
 public:
  KarcherNotConverged(SpdMatrix last_iterate, double residual, int iterations);

  const SpdMatrix& last_iterate() const { return last_; }
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  SpdMatrix last_;
  double residual_;
  int iterations_;
};

struct KarcherResult {
  SpdMatrix mean;
  int iterations = 0;
  double residual = 0.0;
};

/// Squared affine-invariant distance ||log(Y^{-1/2} X Y^{-1/2})||_F^2.
double airm_sq(const SpdMatrix& x, const SpdMatrix& y);

/// Jensen-Bregman LogDet divergence logdet((X+Y)/2) - (logdet X + logdet Y)/2.
double jbld(const SpdMatrix& x, const SpdMatrix& y);

/// sqrt(jbld); a metric on the SPD cone.
double logdet_metric(const SpdMatrix& x, const SpdMatrix& y);

/// airm_sq for Airm, jbld for LogDet.
double squared_distance(MetricKind kind, const SpdMatrix& x, const SpdMatrix& y);
double distance(MetricKind kind, const SpdMatrix& x, const SpdMatrix& y);

/// Riemannian (AIRM) Karcher mean by damped fixed-point iteration from the
/// arithmetic mean. Inputs are visited in a canonical content-hash order, so
/// the result does not depend on the order of `points`.
KarcherResult karcher_mean_detailed(std::span<const SpdMatrix> points,
                                    const KarcherConfig& cfg = {});
SpdMatrix karcher_mean(std::span<const SpdMatrix> points, const KarcherConfig& cfg = {});

/// B^{1/2} log(B^{-1/2} X B^{-1/2}) B^{1/2}.
SymMatrix tangent_log(const SpdMatrix& base, const SpdMatrix& x);
/// Inverse of tangent_log.
SpdMatrix tangent_exp(const SpdMatrix& base, const SymMatrix& s);

namespace geometry {

/// Content hash of the entries (FNV-1a over the raw doubles).
std::uint64_t content_hash(const Matrix& m);

/// Index permutation that visits `points` in canonical order.
std::vector<std::size_t> canonical_order(std::span<const SpdMatrix> points);

}  // namespace geometry

}  // namespace spd
