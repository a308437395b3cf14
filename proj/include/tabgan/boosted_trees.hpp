#pragma once

#include <vector>

namespace tabgan {

struct TreeNode {
  int feature = -1;        // -1 marks a leaf
  double threshold = 0.0;  // rows with x[feature] < threshold go left
  double value = 0.0;      // leaf weight, before shrinkage
  int left = -1;
  int right = -1;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double output(const std::vector<double>& row) const;
  int depth() const;
};

struct GbtConfig {
  enum class Objective { logistic, squared };
  Objective objective = Objective::logistic;
  int max_depth = 3;
  double eta = 0.3;
  double lambda = 1.0;            // L2 on leaf weights
  double min_child_weight = 1.0;  // minimum hessian sum per child
  double base_margin = 0.0;
};

// Gradient-boosted regression trees with second-order splits: leaf weight
// -G/(H+lambda), split gain 1/2*(GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)).
// The ensemble margin is base_margin + eta * sum of tree outputs; the
// logistic objective maps it through a sigmoid for probabilities.
class GradientBoostedTrees {
 public:
  GradientBoostedTrees() = default;
  explicit GradientBoostedTrees(GbtConfig config) : config_(config) {}

  // Appends n_trees new trees fit to the loss gradients at the current
  // ensemble margins. Prior trees are kept untouched.
  void update(const std::vector<std::vector<double>>& rows, const std::vector<double>& targets,
              int n_trees);

  double margin(const std::vector<double>& row) const;
  double predict(const std::vector<double>& row) const;  // probability or value

  const std::vector<Tree>& trees() const { return trees_; }
  const GbtConfig& config() const { return config_; }
  void set_trees(std::vector<Tree> trees) { trees_ = std::move(trees); }

 private:
  GbtConfig config_;
  std::vector<Tree> trees_;
};

double sigmoid(double z);

}  // namespace tabgan
