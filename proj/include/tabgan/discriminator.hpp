#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "tabgan/boosted_trees.hpp"
#include "tabgan/linear_models.hpp"
#include "tabgan/table.hpp"

namespace tabgan {

enum class DiscriminatorKind { logistic, boosted_trees };

struct DiscriminatorConfig {
  DiscriminatorKind kind = DiscriminatorKind::boosted_trees;
  int max_depth = 3;
  double eta = 0.3;
  int trees_per_update = 10;
  double logistic_learning_rate = 0.1;
  int logistic_epochs = 200;
  double logistic_l2 = 1e-3;
  double test_fraction = 0.2;
  uint64_t seed = 0;
};

// Real-vs-synthetic classifier snapshot. fit_update returns a new value;
// existing snapshots are never mutated.
class DiscriminatorModel {
 public:
  static DiscriminatorModel create(const DiscriminatorConfig& config);

  double predict_probability(const std::vector<double>& row) const;  // P(real)
  int rounds_seen() const { return rounds_seen_; }
  const DiscriminatorConfig& config() const { return config_; }

  const GradientBoostedTrees& trees() const;
  const LogisticModel& logistic() const;

  friend DiscriminatorModel fit_update(DiscriminatorModel model, const FeatureMatrix& features,
                                       const std::vector<int>& labels);
  friend std::string save_model(const DiscriminatorModel& model);
  friend DiscriminatorModel load_model(const std::string& text);

 private:
  DiscriminatorConfig config_;
  std::variant<LogisticModel, GradientBoostedTrees> state_;
  int rounds_seen_ = 0;
};

// One incremental fit on a labeled batch (1 = real, 0 = synthetic).
// Logistic models continue gradient descent from their current weights;
// boosted-tree models append trees_per_update new trees. Both classes must
// be present.
DiscriminatorModel fit_update(DiscriminatorModel model, const FeatureMatrix& features,
                              const std::vector<int>& labels);

struct ScoreReport {
  double accuracy = 0.0;
  int n_test = 0;
  int real_total = 0;
  int real_correct = 0;
  int synthetic_total = 0;
  int synthetic_correct = 0;
};

// 0/1 accuracy at threshold 0.5; a tie (p == 0.5) predicts synthetic (0).
ScoreReport evaluate(const DiscriminatorModel& model, const FeatureMatrix& features,
                     const std::vector<int>& labels);

// Adjusted candidate score: accuracy of the current model on the candidate's
// cached synthetic rows (label 0) plus held-out real rows (label 1). Pure.
double score_theta(const DiscriminatorModel& model, const Table& synthetic,
                   const Table& real_test, const FeatureEncoder& encoder);

struct StratifiedSplit {
  std::vector<int> train_idx;
  std::vector<int> test_idx;
};

// Per-class shuffled split reserving ~test_fraction of each class for test
// (at least one per class). Deterministic for a fixed seed.
StratifiedSplit stratified_split(const std::vector<int>& labels, double test_fraction,
                                 uint64_t seed);

// Versioned text checkpoint carrying kind, hyperparameters, and parameters,
// sufficient for exact prediction replay.
std::string save_model(const DiscriminatorModel& model);
DiscriminatorModel load_model(const std::string& text);

}  // namespace tabgan
