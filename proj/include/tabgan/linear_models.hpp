#pragma once

#include <vector>

namespace tabgan {

struct LogisticConfig {
  double learning_rate = 0.1;
  int epochs = 200;
  double l2 = 1e-3;
};

// Binary logistic regression trained by full-batch gradient descent.
// Repeated update calls continue from the current weights.
class LogisticModel {
 public:
  LogisticModel() = default;
  LogisticModel(int n_features, LogisticConfig config);

  void update(const std::vector<std::vector<double>>& rows, const std::vector<double>& targets);
  double predict(const std::vector<double>& row) const;  // probability of class 1

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  void set_parameters(std::vector<double> weights, double bias);
  const LogisticConfig& config() const { return config_; }

 private:
  LogisticConfig config_;
  std::vector<double> weights_;
  double bias_ = 0.0;
};

// Solves A x = b by Gaussian elimination with partial pivoting.
// Throws InvalidArgument on a singular system.
std::vector<double> solve_linear_system(std::vector<std::vector<double>> a, std::vector<double> b);

// Ridge regression fit in closed form via the normal equations; the
// intercept is not penalized.
class RidgeRegression {
 public:
  explicit RidgeRegression(double l2 = 1e-3) : l2_(l2) {}

  void fit(const std::vector<std::vector<double>>& rows, const std::vector<double>& targets);
  double predict(const std::vector<double>& row) const;

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }

 private:
  double l2_;
  std::vector<double> weights_;
  double bias_ = 0.0;
};

}  // namespace tabgan
