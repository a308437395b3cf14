#include "tabgan/linear_models.hpp"

#include <cmath>
#include <cstdlib>

#include "tabgan/boosted_trees.hpp"
#include "tabgan/errors.hpp"

namespace tabgan {

LogisticModel::LogisticModel(int n_features, LogisticConfig config)
    : config_(config), weights_(n_features, 0.0) {}

void LogisticModel::update(const std::vector<std::vector<double>>& rows,
                           const std::vector<double>& targets) {
  if (rows.empty() || rows.size() != targets.size()) {
    throw InvalidArgument("logistic update needs matching non-empty rows and targets");
  }
  if (weights_.empty()) weights_.assign(rows[0].size(), 0.0);
  if (rows[0].size() != weights_.size()) {
    throw InvalidArgument("feature width does not match the model");
  }
  const double n = static_cast<double>(rows.size());
  std::vector<double> grad(weights_.size());
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_bias = 0.0;
    for (size_t i = 0; i < rows.size(); ++i) {
      double err = predict(rows[i]) - targets[i];
      for (size_t f = 0; f < weights_.size(); ++f) grad[f] += err * rows[i][f];
      grad_bias += err;
    }
    for (size_t f = 0; f < weights_.size(); ++f) {
      weights_[f] -= config_.learning_rate * (grad[f] / n + config_.l2 * weights_[f]);
    }
    bias_ -= config_.learning_rate * grad_bias / n;
  }
}

double LogisticModel::predict(const std::vector<double>& row) const {
  double z = bias_;
  for (size_t f = 0; f < weights_.size() && f < row.size(); ++f) z += weights_[f] * row[f];
  return sigmoid(z);
}

void LogisticModel::set_parameters(std::vector<double> weights, double bias) {
  weights_ = std::move(weights);
  bias_ = bias;
}

std::vector<double> solve_linear_system(std::vector<std::vector<double>> a,
                                        std::vector<double> b) {
  const size_t n = a.size();
  for (size_t col = 0; col < n; ++col) {
    size_t pivot = col;
    for (size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-12) throw InvalidArgument("singular linear system");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      double factor = a[r][col] / a[col][col];
      for (size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(n);
  for (size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return x;
}

void RidgeRegression::fit(const std::vector<std::vector<double>>& rows,
                          const std::vector<double>& targets) {
  if (rows.empty() || rows.size() != targets.size()) {
    throw InvalidArgument("ridge fit needs matching non-empty rows and targets");
  }
  const size_t m = rows[0].size();
  const size_t dim = m + 1;  // trailing intercept column
  std::vector<std::vector<double>> ata(dim, std::vector<double>(dim, 0.0));
  std::vector<double> atb(dim, 0.0);
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t r = 0; r < dim; ++r) {
      double xr = r < m ? rows[i][r] : 1.0;
      atb[r] += xr * targets[i];
      for (size_t c = r; c < dim; ++c) {
        double xc = c < m ? rows[i][c] : 1.0;
        ata[r][c] += xr * xc;
      }
    }
  }
  for (size_t r = 0; r < dim; ++r) {
    for (size_t c = 0; c < r; ++c) ata[r][c] = ata[c][r];
  }
  for (size_t r = 0; r < m; ++r) ata[r][r] += l2_;

  auto solution = solve_linear_system(std::move(ata), std::move(atb));
  weights_.assign(solution.begin(), solution.begin() + m);
  bias_ = solution[m];
}

double RidgeRegression::predict(const std::vector<double>& row) const {
  double y = bias_;
  for (size_t f = 0; f < weights_.size() && f < row.size(); ++f) y += weights_[f] * row[f];
  return y;
}

}  // namespace tabgan
