#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/lake.hpp"

namespace lakeorg {

struct EnrichConfig {
  std::size_t min_positives = 10;
  std::size_t neg_ratio = 9;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  std::vector<double> lambdas{1e-4, 1e-3, 1e-2, 1e-1};
  std::vector<double> thresholds{0.3, 0.5, 0.7};
  std::size_t epochs = 300;
  double learning_rate = 1.0;
};

/// L2-regularized logistic regression on the unit-normalized topic vector.
struct TagClassifier {
  std::string tag;
  std::vector<double> weights;
  double bias = 0.0;
  double threshold = 0.5;
  double lambda = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double cv_f1 = 0.0;

  double probability(std::span<const double> topic_mean) const;
  bool predict(std::span<const double> topic_mean) const { return probability(topic_mean) >= threshold; }
};

/// Fits weights and bias by full-batch gradient descent on mean log loss plus
/// lambda/2 |w|^2.
void fit_logistic(std::span<const std::vector<double>> x, std::span<const int> y, double lambda,
                  std::size_t epochs, double learning_rate, std::vector<double>& w, double& b);

/// F1 of predictions against labels; 0 when there are no true positives.
double f1_score(std::span<const int> truth, std::span<const int> predicted);

/// One classifier per tag with enough distinct positives; tags are trained
/// concurrently and returned in tag order.
std::vector<TagClassifier> train_classifiers(const DataLake& lake, const EnrichConfig& cfg,
                                             std::vector<std::string>* warnings = nullptr);

struct TransferReport {
  std::vector<std::pair<std::string, std::size_t>> per_tag;  // tag, attributes predicted positive
  std::size_t attributes_labeled = 0;                          // attributes gaining any tag
};

/// Adds every positively predicted tag to the target's attributes.
DataLake transfer_tags(std::span<const TagClassifier> classifiers, const DataLake& target,
                       TransferReport* report = nullptr);

nlohmann::json to_json(std::span<const TagClassifier> classifiers);
std::vector<TagClassifier> classifiers_from_json(const nlohmann::json& j);

}  // namespace lakeorg
