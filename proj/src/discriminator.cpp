#include "tabgan/discriminator.hpp"

#include <algorithm>
#include <random>

#include <json.hpp>

#include "tabgan/errors.hpp"

namespace tabgan {

DiscriminatorModel DiscriminatorModel::create(const DiscriminatorConfig& config) {
  if (config.test_fraction <= 0.0 || config.test_fraction >= 1.0) {
    throw ConfigError("test_fraction must lie in (0, 1)");
  }
  if (config.max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (config.trees_per_update < 1) throw ConfigError("trees_per_update must be >= 1");
  DiscriminatorModel model;
  model.config_ = config;
  if (config.kind == DiscriminatorKind::logistic) {
    model.state_ = LogisticModel(
        0, LogisticConfig{config.logistic_learning_rate, config.logistic_epochs,
                          config.logistic_l2});
  } else {
    GbtConfig gbt;
    gbt.objective = GbtConfig::Objective::logistic;
    gbt.max_depth = config.max_depth;
    gbt.eta = config.eta;
    model.state_ = GradientBoostedTrees(gbt);
  }
  return model;
}

double DiscriminatorModel::predict_probability(const std::vector<double>& row) const {
  if (std::holds_alternative<LogisticModel>(state_)) {
    return std::get<LogisticModel>(state_).predict(row);
  }
  return std::get<GradientBoostedTrees>(state_).predict(row);
}

const GradientBoostedTrees& DiscriminatorModel::trees() const {
  return std::get<GradientBoostedTrees>(state_);
}

const LogisticModel& DiscriminatorModel::logistic() const {
  return std::get<LogisticModel>(state_);
}

DiscriminatorModel fit_update(DiscriminatorModel model, const FeatureMatrix& features,
                              const std::vector<int>& labels) {
  if (features.rows.size() != labels.size() || features.rows.empty()) {
    throw InvalidArgument("fit_update needs matching non-empty features and labels");
  }
  bool has_real = false;
  bool has_synthetic = false;
  for (int l : labels) {
    if (l == 1) has_real = true;
    else if (l == 0) has_synthetic = true;
    else throw InvalidArgument("labels must be 0 or 1");
  }
  if (!has_real || !has_synthetic) {
    throw InvalidArgument("fit_update needs both classes in the batch");
  }

  std::vector<double> targets(labels.begin(), labels.end());
  if (std::holds_alternative<LogisticModel>(model.state_)) {
    std::get<LogisticModel>(model.state_).update(features.rows, targets);
  } else {
    std::get<GradientBoostedTrees>(model.state_)
        .update(features.rows, targets, model.config_.trees_per_update);
  }
  ++model.rounds_seen_;
  return model;
}

ScoreReport evaluate(const DiscriminatorModel& model, const FeatureMatrix& features,
                     const std::vector<int>& labels) {
  if (features.rows.size() != labels.size() || features.rows.empty()) {
    throw InvalidArgument("evaluate needs matching non-empty features and labels");
  }
  ScoreReport report;
  report.n_test = static_cast<int>(labels.size());
  int correct = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    double p = model.predict_probability(features.rows[i]);
    int predicted = p > 0.5 ? 1 : 0;
    bool ok = predicted == labels[i];
    correct += ok ? 1 : 0;
    if (labels[i] == 1) {
      ++report.real_total;
      report.real_correct += ok ? 1 : 0;
    } else {
      ++report.synthetic_total;
      report.synthetic_correct += ok ? 1 : 0;
    }
  }
  report.accuracy = static_cast<double>(correct) / report.n_test;
  return report;
}

double score_theta(const DiscriminatorModel& model, const Table& synthetic,
                   const Table& real_test, const FeatureEncoder& encoder) {
  if (synthetic.rows.empty()) throw InvalidArgument("score_theta needs synthetic rows");
  if (real_test.rows.empty()) throw InvalidArgument("score_theta needs real test rows");
  FeatureMatrix syn = encoder.transform(synthetic);
  FeatureMatrix real = encoder.transform(real_test);
  FeatureMatrix combined;
  combined.columns = syn.columns;
  combined.normalization = syn.normalization;
  combined.rows = syn.rows;
  combined.rows.insert(combined.rows.end(), real.rows.begin(), real.rows.end());
  std::vector<int> labels(syn.rows.size(), 0);
  labels.insert(labels.end(), real.rows.size(), 1);
  return evaluate(model, combined, labels).accuracy;
}

StratifiedSplit stratified_split(const std::vector<int>& labels, double test_fraction,
                                 uint64_t seed) {
  if (labels.empty()) throw InvalidArgument("stratified_split needs labels");
  if (test_fraction <= 0.0 || test_fraction >= 1.0) {
    throw InvalidArgument("test_fraction must lie in (0, 1)");
  }
  std::vector<int> class0;
  std::vector<int> class1;
  for (size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == 1 ? class1 : class0).push_back(static_cast<int>(i));
  }
  std::mt19937_64 rng(seed);
  StratifiedSplit split;
  for (auto* cls : {&class0, &class1}) {
    if (cls->empty()) continue;
    std::shuffle(cls->begin(), cls->end(), rng);
    int n_test = static_cast<int>(cls->size() * test_fraction + 0.5);
    n_test = std::clamp(n_test, 1, static_cast<int>(cls->size()) - 1);
    if (cls->size() == 1) n_test = 0;
    for (size_t i = 0; i < cls->size(); ++i) {
      (static_cast<int>(i) < n_test ? split.test_idx : split.train_idx).push_back((*cls)[i]);
    }
  }
  std::sort(split.train_idx.begin(), split.train_idx.end());
  std::sort(split.test_idx.begin(), split.test_idx.end());
  return split;
}

namespace {

nlohmann::json tree_to_json(const Tree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes) {
    nodes.push_back({{"f", n.feature},
                     {"t", n.threshold},
                     {"v", n.value},
                     {"l", n.left},
                     {"r", n.right}});
  }
  return nodes;
}

Tree tree_from_json(const nlohmann::json& j) {
  Tree tree;
  for (const auto& n : j) {
    tree.nodes.push_back(TreeNode{n.at("f").get<int>(), n.at("t").get<double>(),
                                  n.at("v").get<double>(), n.at("l").get<int>(),
                                  n.at("r").get<int>()});
  }
  return tree;
}

}  // namespace

std::string save_model(const DiscriminatorModel& model) {
  nlohmann::json j;
  j["version"] = 1;
  j["rounds_seen"] = model.rounds_seen_;
  const auto& cfg = model.config_;
  j["config"] = {{"kind", cfg.kind == DiscriminatorKind::logistic ? "logistic" : "boosted_trees"},
                 {"max_depth", cfg.max_depth},
                 {"eta", cfg.eta},
                 {"trees_per_update", cfg.trees_per_update},
                 {"logistic_learning_rate", cfg.logistic_learning_rate},
                 {"logistic_epochs", cfg.logistic_epochs},
                 {"logistic_l2", cfg.logistic_l2},
                 {"test_fraction", cfg.test_fraction},
                 {"seed", cfg.seed}};
  if (std::holds_alternative<LogisticModel>(model.state_)) {
    const auto& lm = std::get<LogisticModel>(model.state_);
    j["weights"] = lm.weights();
    j["bias"] = lm.bias();
  } else {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : std::get<GradientBoostedTrees>(model.state_).trees()) {
      trees.push_back(tree_to_json(tree));
    }
    j["trees"] = std::move(trees);
  }
  return j.dump(2) + "\n";
}

DiscriminatorModel load_model(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object() || j.value("version", 0) != 1) {
    throw ParseError("unrecognized model checkpoint format");
  }
  const auto& c = j.at("config");
  DiscriminatorConfig cfg;
  cfg.kind = c.at("kind").get<std::string>() == "logistic" ? DiscriminatorKind::logistic
                                                           : DiscriminatorKind::boosted_trees;
  cfg.max_depth = c.at("max_depth").get<int>();
  cfg.eta = c.at("eta").get<double>();
  cfg.trees_per_update = c.at("trees_per_update").get<int>();
  cfg.logistic_learning_rate = c.at("logistic_learning_rate").get<double>();
  cfg.logistic_epochs = c.at("logistic_epochs").get<int>();
  cfg.logistic_l2 = c.at("logistic_l2").get<double>();
  cfg.test_fraction = c.at("test_fraction").get<double>();
  cfg.seed = c.at("seed").get<uint64_t>();

  DiscriminatorModel model = DiscriminatorModel::create(cfg);
  model.rounds_seen_ = j.at("rounds_seen").get<int>();
  if (cfg.kind == DiscriminatorKind::logistic) {
    model.state_ = LogisticModel(static_cast<int>(j.at("weights").size()),
                                 LogisticConfig{cfg.logistic_learning_rate, cfg.logistic_epochs,
                                                cfg.logistic_l2});
    std::get<LogisticModel>(model.state_)
        .set_parameters(j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>());
  } else {
    std::vector<Tree> trees;
    for (const auto& t : j.at("trees")) trees.push_back(tree_from_json(t));
    std::get<GradientBoostedTrees>(model.state_).set_trees(std::move(trees));
  }
  return model;
}

}  // namespace tabgan
