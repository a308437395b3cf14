#include "tabgan/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

#include "tabgan/boosted_trees.hpp"
#include "tabgan/errors.hpp"
#include "tabgan/linear_models.hpp"
#include "tabgan/text_util.hpp"

namespace tabgan {

namespace {

constexpr int kBoostedRounds = 50;

Schema drop_target(const Schema& schema, int target_idx) {
  Schema out = schema;
  out.columns.erase(out.columns.begin() + target_idx);
  out.target.clear();
  return out;
}

Table project_features(const Table& table, int target_idx, const Schema& feature_schema) {
  Table out;
  out.schema = feature_schema;
  out.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Record r = row;
    r.values.erase(r.values.begin() + target_idx);
    out.rows.push_back(std::move(r));
  }
  return out;
}

std::vector<int> class_targets(const Table& table, int target_idx, const ColumnSpec& target) {
  std::vector<int> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const auto& cat = std::get<std::string>(row.values[target_idx]);
    auto it = std::find(target.categories.begin(), target.categories.end(), cat);
    out.push_back(static_cast<int>(it - target.categories.begin()));
  }
  return out;
}

std::vector<double> value_targets(const Table& table, int target_idx) {
  std::vector<double> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) out.push_back(std::get<double>(row.values[target_idx]));
  return out;
}

bool all_equal(const std::vector<double>& values) {
  return std::adjacent_find(values.begin(), values.end(), std::not_equal_to<>()) == values.end();
}

std::vector<int> stratified_bootstrap(const std::vector<int>& classes, int n_classes,
                                      uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> by_class(n_classes);
  for (size_t i = 0; i < classes.size(); ++i) by_class[classes[i]].push_back(static_cast<int>(i));
  std::vector<int> out;
  out.reserve(classes.size());
  for (const auto& members : by_class) {
    for (size_t k = 0; k < members.size(); ++k) out.push_back(members[rng() % members.size()]);
  }
  return out;
}

std::vector<int> plain_bootstrap(size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> out(n);
  for (auto& i : out) i = static_cast<int>(rng() % n);
  return out;
}

std::vector<std::vector<double>> gather_rows(const FeatureMatrix& features,
                                             const std::vector<int>& indices) {
  std::vector<std::vector<double>> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(features.rows[i]);
  return out;
}

template <typename T>
std::vector<T> gather(const std::vector<T>& values, const std::vector<int>& indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(values[i]);
  return out;
}

std::vector<double> one_vs_rest_targets(const std::vector<int>& classes, int positive) {
  std::vector<double> out(classes.size());
  for (size_t i = 0; i < classes.size(); ++i) out[i] = classes[i] == positive ? 1.0 : 0.0;
  return out;
}

std::vector<int> argmax_classes(const std::vector<std::vector<double>>& per_class_scores,
                                size_t n_rows) {
  std::vector<int> out(n_rows, 0);
  for (size_t i = 0; i < n_rows; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < per_class_scores.size(); ++c) {
      if (per_class_scores[c][i] > best) {
        best = per_class_scores[c][i];
        out[i] = static_cast<int>(c);
      }
    }
  }
  return out;
}

std::vector<int> classify_logistic(const std::vector<std::vector<double>>& train_rows,
                                   const std::vector<int>& train_classes, int n_classes,
                                   const FeatureMatrix& test) {
  int width = static_cast<int>(test.columns.size());
  if (n_classes == 2) {
    LogisticModel model(width, LogisticConfig{});
    model.update(train_rows, one_vs_rest_targets(train_classes, 1));
    std::vector<int> out;
    out.reserve(test.rows.size());
    for (const auto& row : test.rows) out.push_back(model.predict(row) > 0.5 ? 1 : 0);
    return out;
  }
  std::vector<std::vector<double>> scores(n_classes);
  for (int c = 0; c < n_classes; ++c) {
    LogisticModel model(width, LogisticConfig{});
    model.update(train_rows, one_vs_rest_targets(train_classes, c));
    scores[c].reserve(test.rows.size());
    for (const auto& row : test.rows) scores[c].push_back(model.predict(row));
  }
  return argmax_classes(scores, test.rows.size());
}

std::vector<int> classify_boosted(const std::vector<std::vector<double>>& train_rows,
                                  const std::vector<int>& train_classes, int n_classes,
                                  const FeatureMatrix& test) {
  GbtConfig config;
  config.objective = GbtConfig::Objective::logistic;
  if (n_classes == 2) {
    GradientBoostedTrees model(config);
    model.update(train_rows, one_vs_rest_targets(train_classes, 1), kBoostedRounds);
    std::vector<int> out;
    out.reserve(test.rows.size());
    for (const auto& row : test.rows) out.push_back(model.predict(row) > 0.5 ? 1 : 0);
    return out;
  }
  std::vector<std::vector<double>> scores(n_classes);
  for (int c = 0; c < n_classes; ++c) {
    GradientBoostedTrees model(config);
    model.update(train_rows, one_vs_rest_targets(train_classes, c), kBoostedRounds);
    scores[c].reserve(test.rows.size());
    for (const auto& row : test.rows) scores[c].push_back(model.predict(row));
  }
  return argmax_classes(scores, test.rows.size());
}

std::vector<double> regress_ridge(const std::vector<std::vector<double>>& train_rows,
                                  const std::vector<double>& train_values,
                                  const FeatureMatrix& test) {
  RidgeRegression model;
  model.fit(train_rows, train_values);
  std::vector<double> out;
  out.reserve(test.rows.size());
  for (const auto& row : test.rows) out.push_back(model.predict(row));
  return out;
}

std::vector<double> regress_boosted(const std::vector<std::vector<double>>& train_rows,
                                    const std::vector<double>& train_values,
                                    const FeatureMatrix& test) {
  GbtConfig config;
  config.objective = GbtConfig::Objective::squared;
  GradientBoostedTrees model(config);
  model.update(train_rows, train_values, kBoostedRounds);
  std::vector<double> out;
  out.reserve(test.rows.size());
  for (const auto& row : test.rows) out.push_back(model.predict(row));
  return out;
}

nlohmann::json quantiles_to_json(const DcrQuantiles& q) {
  return {{"q25", q.q25}, {"q50", q.q50}, {"q75", q.q75}};
}

}  // namespace

double binary_f1(const std::vector<int>& actual, const std::vector<int>& predicted) {
  if (actual.size() != predicted.size())
    throw InvalidArgument("label vectors differ in length");
  int tp = 0;
  int fp = 0;
  int fn = 0;
  for (size_t i = 0; i < actual.size(); ++i) {
    if (predicted[i] == 1 && actual[i] == 1) ++tp;
    if (predicted[i] == 1 && actual[i] != 1) ++fp;
    if (predicted[i] != 1 && actual[i] == 1) ++fn;
  }
  double denom = 2.0 * tp + fp + fn;
  return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
}

double macro_f1(const std::vector<int>& actual, const std::vector<int>& predicted,
                int n_classes) {
  if (actual.size() != predicted.size())
    throw InvalidArgument("label vectors differ in length");
  if (n_classes < 2) throw InvalidArgument("macro-F1 needs at least two classes");
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < n_classes; ++c) {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    for (size_t i = 0; i < actual.size(); ++i) {
      if (predicted[i] == c && actual[i] == c) ++tp;
      if (predicted[i] == c && actual[i] != c) ++fp;
      if (predicted[i] != c && actual[i] == c) ++fn;
    }
    if (tp + fp + fn == 0) continue;
    sum += 2.0 * tp / (2.0 * tp + fp + fn);
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / counted;
}

double r_squared(const std::vector<double>& actual, const std::vector<double>& predicted) {
  if (actual.size() != predicted.size())
    throw InvalidArgument("value vectors differ in length");
  if (actual.empty()) throw InvalidArgument("R^2 of empty vectors");
  double mean = 0.0;
  for (double v : actual) mean += v;
  mean /= static_cast<double>(actual.size());
  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (size_t i = 0; i < actual.size(); ++i) {
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
  }
  if (ss_tot == 0.0) throw InvalidArgument("zero-variance actuals leave R^2 undefined");
  return 1.0 - ss_res / ss_tot;
}

MleReport mle(const Table& synthetic, const Table& real_test, MleTask task,
              const std::vector<uint64_t>& seeds) {
  if (synthetic.schema != real_test.schema)
    throw InvalidArgument("synthetic and test tables must share a schema");
  if (synthetic.rows.empty() || real_test.rows.empty())
    throw InvalidArgument("mle needs non-empty synthetic and test tables");
  if (seeds.empty()) throw InvalidArgument("mle needs at least one seed");
  const Schema& schema = synthetic.schema;
  if (schema.target.empty()) throw InvalidArgument("schema names no target column");
  int target_idx = schema.column_index(schema.target);
  if (target_idx < 0) throw InvalidArgument("target column '" + schema.target + "' not in schema");
  const ColumnSpec& target = schema.columns[target_idx];

  Schema feature_schema = drop_target(schema, target_idx);
  if (feature_schema.columns.empty()) throw InvalidArgument("no feature columns besides the target");
  Table train_features = project_features(synthetic, target_idx, feature_schema);
  Table test_features = project_features(real_test, target_idx, feature_schema);
  FeatureEncoder encoder = FeatureEncoder::fit(train_features);
  FeatureMatrix train = encoder.transform(train_features);
  FeatureMatrix test = encoder.transform(test_features);

  std::vector<int> train_classes;
  std::vector<int> test_classes;
  std::vector<double> train_values;
  std::vector<double> test_values;
  int n_classes = 0;
  if (task == MleTask::classification) {
    if (target.kind != ColumnKind::categorical)
      throw InvalidArgument("classification needs a categorical target");
    n_classes = static_cast<int>(target.categories.size());
    train_classes = class_targets(synthetic, target_idx, target);
    test_classes = class_targets(real_test, target_idx, target);
    std::vector<int> distinct = train_classes;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2)
      throw InvalidArgument("degenerate target: a single class in the synthetic data");
  } else {
    if (target.kind != ColumnKind::numeric)
      throw InvalidArgument("regression needs a numeric target");
    train_values = value_targets(synthetic, target_idx);
    test_values = value_targets(real_test, target_idx);
    if (all_equal(train_values))
      throw InvalidArgument("degenerate target: zero variance in the synthetic data");
    if (all_equal(test_values))
      throw InvalidArgument("degenerate target: zero variance in the test data");
  }

  MleReport report;
  report.task = task;
  report.seeds_used = seeds;
  for (uint64_t seed : seeds) {
    std::vector<int> indices = task == MleTask::classification
                                   ? stratified_bootstrap(train_classes, n_classes, seed)
                                   : plain_bootstrap(synthetic.rows.size(), seed);
    std::vector<std::vector<double>> rows = gather_rows(train, indices);
    std::map<std::string, double> scores;
    if (task == MleTask::classification) {
      std::vector<int> classes = gather(train_classes, indices);
      auto score = [&](const std::vector<int>& predicted) {
        return n_classes == 2 ? binary_f1(test_classes, predicted)
                              : macro_f1(test_classes, predicted, n_classes);
      };
      scores["logistic"] = score(classify_logistic(rows, classes, n_classes, test));
      scores["boosted_trees"] = score(classify_boosted(rows, classes, n_classes, test));
    } else {
      std::vector<double> values = gather(train_values, indices);
      scores["ridge"] = r_squared(test_values, regress_ridge(rows, values, test));
      scores["boosted_trees"] = r_squared(test_values, regress_boosted(rows, values, test));
    }
    report.per_seed.push_back(std::move(scores));
  }

  for (const auto& entry : report.per_seed.front()) {
    double sum = 0.0;
    for (const auto& scores : report.per_seed) sum += scores.at(entry.first);
    report.per_learner[entry.first] = sum / static_cast<double>(report.per_seed.size());
  }
  report.best = -std::numeric_limits<double>::infinity();
  for (const auto& entry : report.per_learner) report.best = std::max(report.best, entry.second);
  double sum_best = 0.0;
  for (const auto& scores : report.per_seed) {
    double seed_best = -std::numeric_limits<double>::infinity();
    for (const auto& entry : scores) seed_best = std::max(seed_best, entry.second);
    sum_best += seed_best;
  }
  report.mean_of_best = sum_best / static_cast<double>(report.per_seed.size());
  return report;
}

double linear_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("quantile of an empty list");
  if (q < 0.0 || q > 1.0) throw InvalidArgument("quantile fraction must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  double h = static_cast<double>(values.size() - 1) * q;
  size_t lo = static_cast<size_t>(std::floor(h));
  size_t hi = static_cast<size_t>(std::ceil(h));
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<double> dcr(const Table& synthetic, const Table& reference,
                        const FeatureEncoder& encoder) {
  if (reference.rows.empty()) throw InvalidArgument("dcr reference table is empty");
  if (synthetic.rows.empty()) throw InvalidArgument("dcr synthetic table is empty");
  FeatureMatrix syn = encoder.transform(synthetic);
  FeatureMatrix ref = encoder.transform(reference);
  std::vector<double> out;
  out.reserve(syn.rows.size());
  for (const auto& s : syn.rows) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : ref.rows) {
      double d = 0.0;
      for (size_t j = 0; j < s.size(); ++j) d += std::abs(s[j] - r[j]);
      if (d < best) best = d;
    }
    out.push_back(best);
  }
  return out;
}

DcrReport dcr_report(const Table& synthetic, const Table& train, const Table& holdout,
                     const FeatureEncoder& encoder) {
  DcrReport report;
  report.distances_to_train = dcr(synthetic, train, encoder);
  report.distances_to_holdout = dcr(synthetic, holdout, encoder);
  report.train_quantiles = {linear_quantile(report.distances_to_train, 0.25),
                            linear_quantile(report.distances_to_train, 0.50),
                            linear_quantile(report.distances_to_train, 0.75)};
  report.holdout_quantiles = {linear_quantile(report.distances_to_holdout, 0.25),
                              linear_quantile(report.distances_to_holdout, 0.50),
                              linear_quantile(report.distances_to_holdout, 0.75)};
  return report;
}

std::string mle_report_to_json(const MleReport& report) {
  nlohmann::json j;
  j["task"] = report.task == MleTask::classification ? "classification" : "regression";
  j["per_learner"] = report.per_learner;
  j["best"] = report.best;
  j["seeds_used"] = report.seeds_used;
  j["mean_of_best"] = report.mean_of_best;
  nlohmann::json per_seed = nlohmann::json::array();
  for (size_t i = 0; i < report.per_seed.size(); ++i) {
    per_seed.push_back({{"seed", report.seeds_used[i]}, {"scores", report.per_seed[i]}});
  }
  j["per_seed"] = per_seed;
  return j.dump(2);
}

std::string mle_report_to_csv(const MleReport& report) {
  std::ostringstream out;
  out << "seed,learner,score\n";
  for (size_t i = 0; i < report.per_seed.size(); ++i) {
    for (const auto& [name, score] : report.per_seed[i]) {
      out << report.seeds_used[i] << ',' << name << ',' << format_double(score) << '\n';
    }
  }
  return out.str();
}

std::string dcr_report_to_json(const DcrReport& report) {
  nlohmann::json j;
  j["distances_to_train"] = report.distances_to_train;
  j["distances_to_holdout"] = report.distances_to_holdout;
  j["train_quantiles"] = quantiles_to_json(report.train_quantiles);
  j["holdout_quantiles"] = quantiles_to_json(report.holdout_quantiles);
  return j.dump(2);
}

std::string dcr_report_to_csv(const DcrReport& report) {
  std::ostringstream out;
  out << "index,distance_to_train,distance_to_holdout\n";
  for (size_t i = 0; i < report.distances_to_train.size(); ++i) {
    out << i << ',' << format_double(report.distances_to_train[i]) << ','
        << format_double(report.distances_to_holdout[i]) << '\n';
  }
  return out.str();
}

}  // namespace tabgan
