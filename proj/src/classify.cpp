#include "spd/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace spd {

MdmModel mdm_train(std::span<const LabeledSample> samples, MetricKind metric,
                   const KarcherConfig& karcher) {
  if (samples.empty()) throw ValidationError("mdm_train: no samples");
  std::map<Label, std::vector<SpdMatrix>> by_class;
  const Eigen::Index n = samples.front().matrix.dim();
  for (const auto& s : samples) {
    if (s.matrix.dim() != n) throw DimensionMismatch("mdm_train: mixed dimensions");
    by_class[s.label].push_back(s.matrix);
  }
  MdmModel model{{}, metric};
  for (const auto& [label, members] : by_class) {
    model.class_means.emplace(label, karcher_mean(members, karcher));
  }
  return model;
}

Label mdm_predict(const MdmModel& model, const SpdMatrix& x) {
  if (model.class_means.empty()) throw ValidationError("mdm_predict: model has no classes");
  Label best = model.class_means.begin()->first;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& [label, mean] : model.class_means) {
    if (mean.dim() != x.dim()) throw DimensionMismatch("mdm_predict: dimension mismatch");
    const double d = squared_distance(model.metric, x, mean);
    if (d < best_d) {
      best_d = d;
      best = label;
    }
  }
  return best;
}

// ---- FGMDM -------------------------------------------------------------------

Vector vectorize_tangent(const SymMatrix& s) {
  const Eigen::Index n = s.dim();
  Vector v(n * (n + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    v(k++) = s(i, i);
    for (Eigen::Index j = i + 1; j < n; ++j) v(k++) = std::sqrt(2.0) * s(i, j);
  }
  return v;
}

SymMatrix unvectorize_tangent(const Vector& v, Eigen::Index dim) {
  if (v.size() != dim * (dim + 1) / 2) throw DimensionMismatch("unvectorize_tangent: bad length");
  Matrix m(dim, dim);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    m(i, i) = v(k++);
    for (Eigen::Index j = i + 1; j < dim; ++j) {
      m(i, j) = m(j, i) = v(k++) / std::sqrt(2.0);
    }
  }
  return SymMatrix(m);
}

FgmdmModel fgmdm_train(std::span<const LabeledSample> samples, const FgmdmOptions& opts) {
  if (samples.empty()) throw ValidationError("fgmdm_train: no samples");
  std::map<Label, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i) by_class[samples[i].label].push_back(i);
  if (by_class.size() < 2) throw ConfigError("fgmdm_train: need at least two classes");
  for (const auto& [label, idx] : by_class) {
    if (idx.size() < 2) {
      throw ConfigError("fgmdm_train: class " + std::to_string(label) + " needs at least two samples");
    }
  }

  std::vector<SpdMatrix> all;
  all.reserve(samples.size());
  for (const auto& s : samples) all.push_back(s.matrix);
  const SpdMatrix reference = karcher_mean(all, opts.karcher);
  const Eigen::Index n = reference.dim();
  const Eigen::Index d = n * (n + 1) / 2;

  Matrix vecs(d, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    vecs.col(static_cast<Eigen::Index>(i)) = vectorize_tangent(tangent_log(reference, samples[i].matrix));
  }

  const Vector grand = vecs.rowwise().mean();
  Matrix within = Matrix::Zero(d, d);
  Matrix between = Matrix::Zero(d, d);
  for (const auto& [label, idx] : by_class) {
    Vector mu = Vector::Zero(d);
    for (std::size_t i : idx) mu += vecs.col(static_cast<Eigen::Index>(i));
    mu /= static_cast<double>(idx.size());
    for (std::size_t i : idx) {
      const Vector c = vecs.col(static_cast<Eigen::Index>(i)) - mu;
      within.noalias() += c * c.transpose();
    }
    const Vector dm = mu - grand;
    between.noalias() += static_cast<double>(idx.size()) * dm * dm.transpose();
  }

  FgmdmModel model{reference, Matrix(), MdmModel{}, 0, 0.0, {}};
  const int classes = static_cast<int>(by_class.size());
  int wanted = opts.n_filters.value_or(classes - 1);
  model.requested_filters = wanted;
  if (wanted < 1) throw ConfigError("fgmdm_train: n_filters must be positive");
  if (wanted > d) {
    model.warnings.push_back("n_filters=" + std::to_string(wanted) + " clamped to tangent dimension " +
                             std::to_string(d));
    wanted = static_cast<int>(d);
  }
  if (wanted > classes - 1) {
    model.warnings.push_back("n_filters=" + std::to_string(wanted) + " exceeds the Fisher rank " +
                             std::to_string(classes - 1) +
                             "; extra directions carry no between-class information");
  }

  if (wanted == d) {
    model.filters = Matrix::Identity(d, d);
  } else {
    double scale = within.trace() / static_cast<double>(d);
    if (!(scale > 0.0)) scale = std::max(between.trace() / static_cast<double>(d), 1.0);
    model.ridge = opts.ridge * scale;
    const Matrix regularized = within + model.ridge * Matrix::Identity(d, d);
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(between, regularized);
    if (ges.info() != Eigen::Success) throw NumericalError("fgmdm_train: Fisher eigensolver failed");
    // Eigenvalues ascend; the leading discriminant directions are the last columns.
    const Matrix directions = ges.eigenvectors().rightCols(wanted);
    Eigen::HouseholderQR<Matrix> qr(directions);
    model.filters = qr.householderQ() * Matrix::Identity(d, wanted);
  }

  std::vector<LabeledSample> filtered;
  filtered.reserve(samples.size());
  for (const auto& s : samples) filtered.push_back({geodesic_filter(model, s.matrix), s.label});
  model.inner = mdm_train(filtered, opts.metric, opts.karcher);
  return model;
}

SpdMatrix geodesic_filter(const FgmdmModel& model, const SpdMatrix& x) {
  if (x.dim() != model.reference.dim()) throw DimensionMismatch("geodesic_filter: dimension mismatch");
  if (model.is_identity_filter()) return x;
  const Vector v = vectorize_tangent(tangent_log(model.reference, x));
  const Vector projected = model.filters * (model.filters.transpose() * v);
  return tangent_exp(model.reference, unvectorize_tangent(projected, x.dim()));
}

Label fgmdm_predict(const FgmdmModel& model, const SpdMatrix& x) {
  return mdm_predict(model.inner, geodesic_filter(model, x));
}

// ---- evaluation --------------------------------------------------------------

Kappa kappa(const Eigen::MatrixXi& confusion) {
  if (confusion.rows() != confusion.cols() || confusion.rows() < 1) {
    throw ValidationError("kappa: confusion matrix must be square and non-empty");
  }
  if ((confusion.array() < 0).any()) throw ValidationError("kappa: negative count");
  const double total = confusion.cast<double>().sum();
  if (total <= 0.0) throw ValidationError("kappa: confusion matrix has no predictions");

  const Eigen::MatrixXd p = confusion.cast<double>() / total;
  Kappa k;
  k.observed = p.trace();
  k.chance = (p.rowwise().sum().array() * p.colwise().sum().transpose().array()).sum();
  if (k.chance >= 1.0) {
    k.degenerate = true;
    k.value = 0.0;
    return k;
  }
  k.value = (k.observed - k.chance) / (1.0 - k.chance);
  return k;
}

ConfusionReport confusion_report(std::span<const Label> truth, std::span<const Label> predicted) {
  if (truth.size() != predicted.size()) throw DimensionMismatch("confusion_report: length mismatch");
  if (truth.empty()) throw ValidationError("confusion_report: no predictions");
  std::set<Label> labels(truth.begin(), truth.end());
  labels.insert(predicted.begin(), predicted.end());
  ConfusionReport r;
  r.labels.assign(labels.begin(), labels.end());
  const auto c = static_cast<Eigen::Index>(r.labels.size());
  r.confusion = Eigen::MatrixXi::Zero(c, c);
  auto index_of = [&](Label l) {
    return static_cast<Eigen::Index>(std::lower_bound(r.labels.begin(), r.labels.end(), l) -
                                     r.labels.begin());
  };
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++r.confusion(index_of(truth[i]), index_of(predicted[i]));
    hits += truth[i] == predicted[i] ? 1 : 0;
  }
  r.accuracy = static_cast<double>(hits) / static_cast<double>(truth.size());
  r.kappa = kappa(r.confusion);
  return r;
}

}  // namespace spd
