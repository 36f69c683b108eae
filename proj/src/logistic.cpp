#include "arttrack/logistic.hpp"

#include <cmath>

#include "arttrack/core_model.hpp"
#include "arttrack/errors.hpp"

namespace arttrack {

LogisticModel::LogisticModel(std::string schema, std::vector<std::string> feature_names,
                             std::vector<double> weights, std::vector<double> offset,
                             std::vector<double> scale)
    : schema_(std::move(schema)),
      names_(std::move(feature_names)),
      weights_(std::move(weights)),
      offset_(std::move(offset)),
      scale_(std::move(scale)) {
  const auto d = names_.size();
  if (weights_.size() != d + 1)
    throw StructuralError("model '" + schema_ + "' needs " + std::to_string(d + 1) + " weights, got " +
                          std::to_string(weights_.size()));
  if (offset_.empty()) offset_.assign(d, 0.0);
  if (scale_.empty()) scale_.assign(d, 1.0);
  if (offset_.size() != d || scale_.size() != d)
    throw StructuralError("model '" + schema_ + "' standardization does not match feature count");
  for (double s : scale_)
    if (!(s > 0.0) || !std::isfinite(s)) throw StructuralError("standardization scale must be positive");
  for (double w : weights_)
    if (!std::isfinite(w)) throw StructuralError("non-finite model weight");
}

std::vector<double> LogisticModel::standardize(std::span<const double> features) const {
  if (features.size() != names_.size())
    throw StructuralError("model '" + schema_ + "' expects " + std::to_string(names_.size()) +
                          " features, got " + std::to_string(features.size()));
  std::vector<double> z(features.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!std::isfinite(features[k])) throw DomainError("non-finite feature value");
    z[k] = (features[k] - offset_[k]) / scale_[k];
  }
  return z;
}

double LogisticModel::decision(std::span<const double> features) const {
  const auto z = standardize(features);
  double s = weights_.back();
  for (std::size_t k = 0; k < z.size(); ++k) s += weights_[k] * z[k];
  return s;
}

double LogisticModel::probability(std::span<const double> features) const {
  return sigmoid(decision(features));
}

double LogisticModel::probability(const EdgeFeatureVector& features) const {
  if (features.schema != schema_)
    throw StructuralError("feature schema '" + features.schema + "' does not match model '" + schema_ + "'");
  return probability(features.values);
}

// ---------------------------------------------------------------------------

namespace {

// log(1 + exp(s)) without overflow.
double softplus(double s) { return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

}  // namespace

LogisticLoss::LogisticLoss(std::vector<std::vector<double>> standardized, std::vector<int> labels, double l2)
    : rows_(std::move(standardized)), labels_(std::move(labels)), l2_(l2), dim_(0) {
  if (rows_.empty()) throw StructuralError("logistic loss needs at least one sample");
  if (rows_.size() != labels_.size()) throw StructuralError("sample and label counts differ");
  if (l2_ < 0) throw ConfigError("l2 must be non-negative");
  dim_ = rows_.front().size();
  for (const auto& r : rows_)
    if (r.size() != dim_) throw StructuralError("samples have inconsistent feature counts");
  for (int y : labels_)
    if (y != 0 && y != 1) throw StructuralError("labels must be 0 or 1");
}

double LogisticLoss::value(std::span<const double> w) const {
  double total = 0.0;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    double s = w[dim_];
    for (std::size_t k = 0; k < dim_; ++k) s += w[k] * rows_[i][k];
    total += softplus(s) - labels_[i] * s;
  }
  double reg = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) reg += w[k] * w[k];
  return total / static_cast<double>(rows_.size()) + 0.5 * l2_ * reg;
}

std::vector<double> LogisticLoss::gradient(std::span<const double> w) const {
  std::vector<double> g(dim_ + 1, 0.0);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    double s = w[dim_];
    for (std::size_t k = 0; k < dim_; ++k) s += w[k] * rows_[i][k];
    const double r = sigmoid(s) - labels_[i];
    for (std::size_t k = 0; k < dim_; ++k) g[k] += r * rows_[i][k];
    g[dim_] += r;
  }
  const double n = static_cast<double>(rows_.size());
  for (auto& v : g) v /= n;
  for (std::size_t k = 0; k < dim_; ++k) g[k] += l2_ * w[k];
  return g;
}

LogisticModel train_logistic(const std::vector<EdgeFeatureVector>& samples, const std::vector<int>& labels,
                             const TrainOptions& options, TrainReport* report) {
  if (samples.empty()) throw StructuralError("train_logistic needs at least one sample");
  if (options.steps < 0 || !(options.learning_rate > 0))
    throw ConfigError("training needs steps >= 0 and a positive learning rate");
  const auto& schema = samples.front().schema;
  const auto& names = samples.front().names;
  const std::size_t d = names.size();
  for (const auto& s : samples)
    if (s.schema != schema || s.names != names || s.values.size() != d)
      throw StructuralError("training samples mix feature schemas");

  std::vector<double> mean(d, 0.0), scale(d, 0.0);
  for (const auto& s : samples)
    for (std::size_t k = 0; k < d; ++k) mean[k] += s.values[k];
  for (auto& m : mean) m /= static_cast<double>(samples.size());
  for (const auto& s : samples)
    for (std::size_t k = 0; k < d; ++k) scale[k] += (s.values[k] - mean[k]) * (s.values[k] - mean[k]);
  for (auto& v : scale) {
    v = std::sqrt(v / static_cast<double>(samples.size()));
    if (v < 1e-12) v = 1.0;
  }

  // Standardize through a provisional model so the same code path is used
  // at prediction time.
  const LogisticModel frame(schema, names, std::vector<double>(d + 1, 0.0), mean, scale);
  std::vector<std::vector<double>> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) rows.push_back(frame.standardize(s.values));
  const LogisticLoss loss(std::move(rows), labels, options.l2);

  std::vector<double> w(d + 1, 0.0);
  double current = loss.value(w);
  if (report) report->loss = {current};
  double lr = options.learning_rate;
  std::vector<double> trial(w.size());
  for (int step = 0; step < options.steps; ++step) {
    const auto g = loss.gradient(w);
    double next = current;
    for (int halvings = 0; halvings < 40; ++halvings) {
      for (std::size_t k = 0; k < w.size(); ++k) trial[k] = w[k] - lr * g[k];
      next = loss.value(trial);
      if (next <= current) break;
      lr *= 0.5;
    }
    if (next <= current) {
      w = trial;
      current = next;
    }
    if (report) report->loss.push_back(current);
  }
  return LogisticModel(schema, names, std::move(w), std::move(mean), std::move(scale));
}

double accuracy(const LogisticModel& model, const std::vector<EdgeFeatureVector>& samples,
                const std::vector<int>& labels) {
  if (samples.size() != labels.size() || samples.empty())
    throw StructuralError("accuracy needs equally many samples and labels");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    hits += ((model.probability(samples[i]) >= 0.5) == (labels[i] == 1)) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace arttrack
