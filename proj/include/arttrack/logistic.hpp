#pragma once

// Logistic regression over named edge features, trained by full-batch
// gradient descent on the L2-regularized cross-entropy.

#include <span>
#include <string>
#include <vector>

namespace arttrack {

struct EdgeFeatureVector {
  std::string schema;
  std::vector<std::string> names;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

/// p(y = 1 | f) = sigmoid(<w, z> + b) with z the standardized features
/// z_k = (f_k - offset_k) / scale_k.
class LogisticModel {
 public:
  LogisticModel() = default;
  /// `weights` holds one entry per feature followed by the bias. Empty
  /// `offset` / `scale` mean identity standardization.
  LogisticModel(std::string schema, std::vector<std::string> feature_names, std::vector<double> weights,
                std::vector<double> offset = {}, std::vector<double> scale = {});

  const std::string& schema() const { return schema_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& offset() const { return offset_; }
  const std::vector<double>& scale() const { return scale_; }
  std::size_t feature_count() const { return names_.size(); }

  /// Linear predictor <w, z> + b. Throws StructuralError on a size mismatch
  /// and DomainError on non-finite input.
  double decision(std::span<const double> features) const;
  double probability(std::span<const double> features) const;
  /// Also checks that the schema matches.
  double probability(const EdgeFeatureVector& features) const;

  std::vector<double> standardize(std::span<const double> features) const;

  friend bool operator==(const LogisticModel&, const LogisticModel&) = default;

 private:
  std::string schema_;
  std::vector<std::string> names_;
  std::vector<double> weights_;
  std::vector<double> offset_;
  std::vector<double> scale_;
};

/// Mean cross-entropy plus (l2 / 2) * |w|^2 over standardized samples; the
/// bias (last weight) is not regularized.
class LogisticLoss {
 public:
  LogisticLoss(std::vector<std::vector<double>> standardized, std::vector<int> labels, double l2);

  double value(std::span<const double> weights) const;
  std::vector<double> gradient(std::span<const double> weights) const;
  std::size_t dimension() const { return dim_ + 1; }

 private:
  std::vector<std::vector<double>> rows_;
  std::vector<int> labels_;
  double l2_;
  std::size_t dim_;
};

struct TrainOptions {
  double l2 = 1e-3;
  int steps = 500;
  double learning_rate = 1.0;
};

struct TrainReport {
  /// Loss before training followed by the loss after each step.
  std::vector<double> loss;
};

/// Fits a LogisticModel. Features are standardized with the sample mean and
/// standard deviation. Each step halves the learning rate until the loss
/// does not increase, so the recorded loss is non-increasing.
LogisticModel train_logistic(const std::vector<EdgeFeatureVector>& samples, const std::vector<int>& labels,
                             const TrainOptions& options = {}, TrainReport* report = nullptr);

double accuracy(const LogisticModel& model, const std::vector<EdgeFeatureVector>& samples,
                const std::vector<int>& labels);

}  // namespace arttrack
