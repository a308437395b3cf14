#include <doctest.h>

#include <random>

#include "tabgan/errors.hpp"
#include "tabgan/linear_models.hpp"

using namespace tabgan;

TEST_CASE("solve_linear_system solves an exact 2x2") {
  auto x = solve_linear_system({{2.0, 1.0}, {1.0, 3.0}}, {5.0, 10.0});
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(3.0));
}

TEST_CASE("solve_linear_system rejects singular systems") {
  CHECK_THROWS_AS(solve_linear_system({{1.0, 2.0}, {2.0, 4.0}}, {1.0, 2.0}), InvalidArgument);
}

TEST_CASE("logistic separates blobs and warm-starts") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  for (int i = 0; i < 100; ++i) {
    rows.push_back({noise(rng), noise(rng)});
    targets.push_back(0.0);
    rows.push_back({4.0 + noise(rng), noise(rng)});
    targets.push_back(1.0);
  }
  LogisticModel model(2, LogisticConfig{});
  model.update(rows, targets);
  int correct = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    int pred = model.predict(rows[i]) > 0.5 ? 1 : 0;
    correct += pred == static_cast<int>(targets[i]) ? 1 : 0;
  }
  CHECK(static_cast<double>(correct) / rows.size() >= 0.99);

  // further updates keep the weights moving from where they were
  auto w_before = model.weights();
  model.update(rows, targets);
  CHECK(model.weights() != w_before);
  int correct_after = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    int pred = model.predict(rows[i]) > 0.5 ? 1 : 0;
    correct_after += pred == static_cast<int>(targets[i]) ? 1 : 0;
  }
  CHECK(static_cast<double>(correct_after) / rows.size() >= 0.99);
}

TEST_CASE("ridge recovers a linear relationship") {
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  for (int i = 0; i < 30; ++i) {
    double x = i / 3.0;
    rows.push_back({x});
    targets.push_back(2.0 * x + 1.0);
  }
  RidgeRegression model(1e-6);
  model.fit(rows, targets);
  CHECK(model.weights()[0] == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(model.bias() == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(model.predict({10.0}) == doctest::Approx(21.0).epsilon(1e-2));
}

TEST_CASE("ridge handles collinear features via regularization") {
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  for (int i = 0; i < 20; ++i) {
    double x = static_cast<double>(i);
    rows.push_back({x, x});  // perfectly collinear
    targets.push_back(3.0 * x);
  }
  RidgeRegression model(1e-3);
  model.fit(rows, targets);
  CHECK(model.predict({5.0, 5.0}) == doctest::Approx(15.0).epsilon(1e-2));
}
