#pragma once

// Minimum-distance-to-mean classifiers over SPD features.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spd/dplm.hpp"
#include "spd/geometry.hpp"

namespace spd {

struct MdmModel {
  std::map<Label, SpdMatrix> class_means;
  MetricKind metric = MetricKind::Airm;
};

MdmModel mdm_train(std::span<const LabeledSample> samples, MetricKind metric = MetricKind::Airm,
                   const KarcherConfig& karcher = {});

/// Nearest class mean; ties go to the lower label.
Label mdm_predict(const MdmModel& model, const SpdMatrix& x);

struct FgmdmOptions {
  /// Retained discriminant directions; nullopt means C - 1.
  std::optional<int> n_filters;
  /// Ridge added to the within-class scatter, relative to trace(S_w) / dim.
  double ridge = 1e-3;
  MetricKind metric = MetricKind::Airm;
  KarcherConfig karcher;
};

struct FgmdmModel {
  SpdMatrix reference;
  /// Orthonormal columns spanning the retained tangent-space directions
  /// (vectorized coordinates, n(n+1)/2 rows).
  Matrix filters;
  MdmModel inner;

  // Metadata recorded at training time.
  int requested_filters = 0;
  double ridge = 0.0;
  std::vector<std::string> warnings;

  Eigen::Index retained() const { return filters.cols(); }
  bool is_identity_filter() const { return filters.cols() == filters.rows(); }
};

/// Upper-triangle vectorization with off-diagonal entries scaled by sqrt(2),
/// so that the Euclidean norm equals the Frobenius norm.
Vector vectorize_tangent(const SymMatrix& s);
SymMatrix unvectorize_tangent(const Vector& v, Eigen::Index dim);

FgmdmModel fgmdm_train(std::span<const LabeledSample> samples, const FgmdmOptions& opts = {});

/// Orthogonal projection of tangent_log(reference, X) onto the filter span,
/// mapped back with tangent_exp. Same dimension as X.
SpdMatrix geodesic_filter(const FgmdmModel& model, const SpdMatrix& x);

Label fgmdm_predict(const FgmdmModel& model, const SpdMatrix& x);

struct Kappa {
  double value = 0.0;
  double observed = 0.0;  // p_o
  double chance = 0.0;    // p_e
  bool degenerate = false;
};

/// Cohen's kappa of a square confusion matrix (rows: truth, cols: prediction).
Kappa kappa(const Eigen::MatrixXi& confusion);

struct ConfusionReport {
  std::vector<Label> labels;  // row/column order
  Eigen::MatrixXi confusion;
  double accuracy = 0.0;
  Kappa kappa;
};

ConfusionReport confusion_report(std::span<const Label> truth, std::span<const Label> predicted);

}  // namespace spd
