#include "tabgan/boosted_trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabgan/errors.hpp"

namespace tabgan {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double Tree::output(const std::vector<double>& row) const {
  int i = 0;
  while (nodes[i].feature >= 0) {
    i = row[nodes[i].feature] < nodes[i].threshold ? nodes[i].left : nodes[i].right;
  }
  return nodes[i].value;
}

int Tree::depth() const {
  int max_depth = 0;
  // depth via parent-pointer-free walk: recompute per node
  std::vector<int> depths(nodes.size(), 0);
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].feature < 0) continue;
    depths[nodes[i].left] = depths[i] + 1;
    depths[nodes[i].right] = depths[i] + 1;
    max_depth = std::max(max_depth, depths[i] + 1);
  }
  return max_depth;
}

namespace {

struct SplitChoice {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

double leaf_weight(double g, double h, double lambda) { return -g / (h + lambda); }

double score_part(double g, double h, double lambda) { return g * g / (h + lambda); }

// Grows one tree on (gradient, hessian) pairs. Children are appended in
// left-then-right order so node 0 stays the root.
void grow(Tree& tree, int node, const std::vector<std::vector<double>>& rows,
          const std::vector<double>& grad, const std::vector<double>& hess,
          std::vector<int>& idx, int depth, const GbtConfig& cfg) {
  double g_total = 0.0;
  double h_total = 0.0;
  for (int i : idx) {
    g_total += grad[i];
    h_total += hess[i];
  }

  SplitChoice best;
  if (depth < cfg.max_depth && idx.size() >= 2) {
    const int n_features = static_cast<int>(rows[idx[0]].size());
    for (int f = 0; f < n_features; ++f) {
      std::vector<int> order = idx;
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return rows[a][f] < rows[b][f]; });
      double gl = 0.0;
      double hl = 0.0;
      for (size_t k = 0; k + 1 < order.size(); ++k) {
        gl += grad[order[k]];
        hl += hess[order[k]];
        double left_val = rows[order[k]][f];
        double right_val = rows[order[k + 1]][f];
        if (left_val == right_val) continue;
        double gr = g_total - gl;
        double hr = h_total - hl;
        if (hl < cfg.min_child_weight || hr < cfg.min_child_weight) continue;
        double gain = 0.5 * (score_part(gl, hl, cfg.lambda) + score_part(gr, hr, cfg.lambda) -
                             score_part(g_total, h_total, cfg.lambda));
        if (gain > best.gain + 1e-12) {
          best.gain = gain;
          best.feature = f;
          best.threshold = (left_val + right_val) / 2.0;
        }
      }
    }
  }

  if (best.feature < 0) {
    tree.nodes[node].feature = -1;
    tree.nodes[node].value = leaf_weight(g_total, h_total, cfg.lambda);
    return;
  }

  std::vector<int> left_idx;
  std::vector<int> right_idx;
  for (int i : idx) {
    (rows[i][best.feature] < best.threshold ? left_idx : right_idx).push_back(i);
  }

  tree.nodes[node].feature = best.feature;
  tree.nodes[node].threshold = best.threshold;
  tree.nodes[node].left = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back(TreeNode{});
  tree.nodes[node].right = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back(TreeNode{});
  grow(tree, tree.nodes[node].left, rows, grad, hess, left_idx, depth + 1, cfg);
  grow(tree, tree.nodes[node].right, rows, grad, hess, right_idx, depth + 1, cfg);
}

}  // namespace

void GradientBoostedTrees::update(const std::vector<std::vector<double>>& rows,
                                  const std::vector<double>& targets, int n_trees) {
  if (rows.empty() || rows.size() != targets.size()) {
    throw InvalidArgument("boosted-tree update needs matching non-empty rows and targets");
  }
  std::vector<double> margins(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) margins[i] = margin(rows[i]);

  std::vector<double> grad(rows.size());
  std::vector<double> hess(rows.size());
  std::vector<int> idx(rows.size());
  std::iota(idx.begin(), idx.end(), 0);

  for (int t = 0; t < n_trees; ++t) {
    for (size_t i = 0; i < rows.size(); ++i) {
      if (config_.objective == GbtConfig::Objective::logistic) {
        double p = sigmoid(margins[i]);
        grad[i] = p - targets[i];
        hess[i] = std::max(p * (1.0 - p), 1e-16);
      } else {
        grad[i] = margins[i] - targets[i];
        hess[i] = 1.0;
      }
    }
    Tree tree;
    tree.nodes.push_back(TreeNode{});
    grow(tree, 0, rows, grad, hess, idx, 0, config_);
    for (size_t i = 0; i < rows.size(); ++i) margins[i] += config_.eta * tree.output(rows[i]);
    trees_.push_back(std::move(tree));
  }
}

double GradientBoostedTrees::margin(const std::vector<double>& row) const {
  double m = config_.base_margin;
  for (const auto& tree : trees_) m += config_.eta * tree.output(row);
  return m;
}

double GradientBoostedTrees::predict(const std::vector<double>& row) const {
  double m = margin(row);
  return config_.objective == GbtConfig::Objective::logistic ? sigmoid(m) : m;
}

}  // namespace tabgan
