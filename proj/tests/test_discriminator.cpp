#include <doctest.h>

#include <random>

#include "tabgan/discriminator.hpp"
#include "tabgan/errors.hpp"

using namespace tabgan;

namespace {

// Two 2-D uniform blobs with a clean margin of 2 between them.
void make_blobs(int n_per_class, FeatureMatrix& features, std::vector<int>& labels,
                uint64_t seed, double center_gap = 4.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  features.rows.clear();
  labels.clear();
  features.columns = {EncodedColumn{"x", ""}, EncodedColumn{"y", ""}};
  for (int i = 0; i < n_per_class; ++i) {
    features.rows.push_back({noise(rng), noise(rng)});
    labels.push_back(0);
    features.rows.push_back({center_gap + noise(rng), noise(rng)});
    labels.push_back(1);
  }
}

DiscriminatorModel hand_logistic(double weight, double bias) {
  std::string checkpoint = std::string("{\"version\":1,\"rounds_seen\":1,\"config\":{") +
                           "\"kind\":\"logistic\",\"max_depth\":3,\"eta\":0.3," +
                           "\"trees_per_update\":10,\"logistic_learning_rate\":0.1," +
                           "\"logistic_epochs\":200,\"logistic_l2\":0.001," +
                           "\"test_fraction\":0.2,\"seed\":0}," +
                           "\"weights\":[" + std::to_string(weight) + "]," +
                           "\"bias\":" + std::to_string(bias) + "}";
  return load_model(checkpoint);
}

}  // namespace

TEST_CASE("one update separates clean blobs") {
  for (auto kind : {DiscriminatorKind::boosted_trees, DiscriminatorKind::logistic}) {
    DiscriminatorConfig cfg;
    cfg.kind = kind;
    FeatureMatrix features;
    std::vector<int> labels;
    make_blobs(100, features, labels, 42);
    auto model = fit_update(DiscriminatorModel::create(cfg), features, labels);
    CHECK(evaluate(model, features, labels).accuracy >= 0.99);
    CHECK(model.rounds_seen() == 1);
  }
}

TEST_CASE("identical clouds stay at chance on held-out rows") {
  int inside = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed * 977 + 5);
    std::uniform_real_distribution<double> noise(0.0, 1.0);
    FeatureMatrix features;
    features.columns = {EncodedColumn{"x", ""}, EncodedColumn{"y", ""}};
    std::vector<int> labels;
    for (int i = 0; i < 500; ++i) {
      features.rows.push_back({noise(rng), noise(rng)});
      labels.push_back(i % 2);
    }
    auto split = stratified_split(labels, 0.2, seed);
    FeatureMatrix train_m;
    train_m.columns = features.columns;
    std::vector<int> train_l;
    for (int i : split.train_idx) {
      train_m.rows.push_back(features.rows[i]);
      train_l.push_back(labels[i]);
    }
    FeatureMatrix test_m;
    test_m.columns = features.columns;
    std::vector<int> test_l;
    for (int i : split.test_idx) {
      test_m.rows.push_back(features.rows[i]);
      test_l.push_back(labels[i]);
    }
    auto model = fit_update(DiscriminatorModel::create(DiscriminatorConfig{}), train_m, train_l);
    double acc = evaluate(model, test_m, test_l).accuracy;
    if (acc >= 0.35 && acc <= 0.65) ++inside;
  }
  CHECK(inside >= 19);
}

TEST_CASE("fit_update twice doubles the tree count") {
  DiscriminatorConfig cfg;
  FeatureMatrix features;
  std::vector<int> labels;
  make_blobs(50, features, labels, 7);
  auto once = fit_update(DiscriminatorModel::create(cfg), features, labels);
  auto twice = fit_update(once, features, labels);
  CHECK(once.trees().trees().size() == static_cast<size_t>(cfg.trees_per_update));
  CHECK(twice.trees().trees().size() == static_cast<size_t>(2 * cfg.trees_per_update));
  CHECK(twice.rounds_seen() == 2);
  // snapshots are independent values
  CHECK(once.trees().trees().size() == static_cast<size_t>(cfg.trees_per_update));
}

TEST_CASE("warm start never loses a separable fit") {
  DiscriminatorConfig cfg;
  FeatureMatrix features;
  std::vector<int> labels;
  make_blobs(100, features, labels, 13);
  auto model = fit_update(DiscriminatorModel::create(cfg), features, labels);
  for (int round = 0; round < 4; ++round) {
    model = fit_update(model, features, labels);
    CHECK(evaluate(model, features, labels).accuracy >= 0.99);
  }
}

TEST_CASE("fit_update rejects single-class batches") {
  DiscriminatorConfig cfg;
  FeatureMatrix features;
  features.rows = {{0.0}, {1.0}};
  CHECK_THROWS_AS(fit_update(DiscriminatorModel::create(cfg), features, {1, 1}), InvalidArgument);
  CHECK_THROWS_AS(fit_update(DiscriminatorModel::create(cfg), features, {0, 2}), InvalidArgument);
}

TEST_CASE("evaluate matches hand-computed accuracy and tie rule") {
  auto model = hand_logistic(1.0, 0.0);
  FeatureMatrix features;
  features.rows = {{-2.0}, {1.0}, {0.0}};
  // p = sigmoid(-2) -> 0, sigmoid(1) -> 1, sigmoid(0) = 0.5 -> tie -> 0
  auto all_correct = evaluate(model, features, {0, 1, 0});
  CHECK(all_correct.accuracy == 1.0);
  CHECK(all_correct.n_test == 3);
  CHECK(all_correct.real_total == 1);
  CHECK(all_correct.synthetic_total == 2);

  auto partial = evaluate(model, features, {0, 1, 1});
  CHECK(partial.accuracy == doctest::Approx(2.0 / 3.0));

  auto all_wrong = evaluate(model, features, {1, 0, 1});
  CHECK(all_wrong.accuracy == 0.0);
}

TEST_CASE("score_theta flags out-of-support synthetic rows and is pure") {
  Schema s;
  s.columns = {ColumnSpec{"v", ColumnKind::numeric, "", {}},
               ColumnSpec{"w", ColumnKind::numeric, "", {}}};
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Table real;
  real.schema = s;
  Table fake;
  fake.schema = s;
  for (int i = 0; i < 200; ++i) {
    real.rows.push_back(Record{{u(rng), u(rng)}});
    fake.rows.push_back(Record{{10.0 + u(rng), 10.0 + u(rng)}});
  }
  auto encoder = FeatureEncoder::fit(real);

  FeatureMatrix combined = encoder.transform(fake);
  auto real_m = encoder.transform(real);
  combined.rows.insert(combined.rows.end(), real_m.rows.begin(), real_m.rows.end());
  std::vector<int> labels(fake.rows.size(), 0);
  labels.insert(labels.end(), real.rows.size(), 1);
  auto model = fit_update(DiscriminatorModel::create(DiscriminatorConfig{}), combined, labels);

  double outlier_score = score_theta(model, fake, real, encoder);
  CHECK(outlier_score >= 0.9);

  double again = score_theta(model, fake, real, encoder);
  CHECK(outlier_score == again);
  CHECK(evaluate(model, combined, labels).accuracy == doctest::Approx(outlier_score));

  // synthetic identical to real cannot be separated: score near class prior
  double copy_score = score_theta(model, real, real, encoder);
  CHECK(copy_score > 0.3);
  CHECK(copy_score < 0.7);

  Table empty;
  empty.schema = s;
  CHECK_THROWS_AS(score_theta(model, empty, real, encoder), InvalidArgument);
}

TEST_CASE("stratified_split is deterministic and class-balanced") {
  std::vector<int> labels;
  for (int i = 0; i < 100; ++i) labels.push_back(i < 60 ? 0 : 1);
  auto a = stratified_split(labels, 0.2, 9);
  auto b = stratified_split(labels, 0.2, 9);
  CHECK(a.train_idx == b.train_idx);
  CHECK(a.test_idx == b.test_idx);
  CHECK(a.train_idx.size() + a.test_idx.size() == labels.size());

  int test0 = 0;
  int test1 = 0;
  for (int i : a.test_idx) (labels[i] == 0 ? test0 : test1)++;
  CHECK(test0 == 12);
  CHECK(test1 == 8);
}

TEST_CASE("checkpoints replay predictions exactly") {
  for (auto kind : {DiscriminatorKind::boosted_trees, DiscriminatorKind::logistic}) {
    DiscriminatorConfig cfg;
    cfg.kind = kind;
    FeatureMatrix features;
    std::vector<int> labels;
    make_blobs(60, features, labels, 31);
    auto model = fit_update(DiscriminatorModel::create(cfg), features, labels);
    auto restored = load_model(save_model(model));
    CHECK(restored.rounds_seen() == model.rounds_seen());
    for (const auto& row : features.rows) {
      CHECK(restored.predict_probability(row) == model.predict_probability(row));
    }
  }
  CHECK_THROWS_AS(load_model("{}"), ParseError);
}
