#include "tabgan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "tabgan/errors.hpp"
#include "tabgan/text_util.hpp"

namespace tabgan {

bool converged(const std::vector<IterationLog>& history, const ConvergenceConfig& convergence) {
  if (history.empty()) return false;
  if (history.back().score <= convergence.floor) return true;
  if (static_cast<int>(history.size()) < convergence.window) return false;
  double lo = 2.0;
  double hi = -1.0;
  for (size_t i = history.size() - convergence.window; i < history.size(); ++i) {
    lo = std::min(lo, history[i].score);
    hi = std::max(hi, history[i].score);
  }
  return (hi - lo) < convergence.epsilon;
}

namespace {

std::string theta_digest(const DataGenProcess& theta) {
  return hex16(fnv1a64(render_theta_text(theta)));
}

std::string strive_line_for(double previous_score) {
  double percent = std::round(previous_score * 10000.0) / 100.0;
  return "As such, strive for a quality score that is less than " + format_double(percent);
}

class RunLogger {
 public:
  explicit RunLogger(const std::string& path) {
    if (!path.empty()) out_.open(path, std::ios::trunc);
  }

  void header(const RunConfig& config, const Dag& structure, size_t train_rows) {
    if (!out_) return;
    nlohmann::json j;
    j["type"] = "run_header";
    j["max_epochs"] = config.max_epochs;
    j["batch_size"] = config.batch_size;
    j["k"] = config.k;
    j["seed"] = config.seed;
    j["n_examples_per_call"] = config.gen.n_examples_per_call;
    j["generator_temperature"] = config.gen.temperature;
    j["convergence"] = {{"window", config.convergence.window},
                        {"epsilon", config.convergence.epsilon},
                        {"floor", config.convergence.floor}};
    j["initial_structure"] = to_pairs_text(structure);
    j["train_rows"] = train_rows;
    out_ << j.dump() << "\n";
  }

  void iteration(const IterationLog& log, const DataGenProcess& theta,
                 const Trajectory& trajectory, bool optimizer_parse_failed) {
    if (!out_) return;
    nlohmann::json j;
    j["type"] = "iteration";
    j["epoch"] = log.epoch;
    j["batch_index"] = log.batch_index;
    j["score"] = log.score;
    j["theta_digest"] = log.theta_digest;
    j["theta_text"] = render_theta_text(theta);
    if (log.ged_to_reference) {
      j["ged_to_reference"] = *log.ged_to_reference;
    } else {
      j["ged_to_reference"] = nullptr;
    }
    j["rejected"] = log.rejected;
    j["copies_of_examples"] = log.copies_of_examples;
    nlohmann::json scores = nlohmann::json::array();
    for (const auto& candidate : trajectory.candidates) {
      scores.push_back(candidate.adjusted_score);
    }
    j["trajectory_scores"] = scores;
    j["optimizer_parse_failed"] = optimizer_parse_failed;
    out_ << j.dump() << "\n";
  }

  void skipped(int epoch, int batch_index, const std::string& reason) {
    if (!out_) return;
    nlohmann::json j;
    j["type"] = "batch_skipped";
    j["epoch"] = epoch;
    j["batch_index"] = batch_index;
    j["error"] = reason;
    out_ << j.dump() << "\n";
  }

 private:
  std::ofstream out_;
};

void validate_config(const Table& train, const RunConfig& config) {
  if (config.max_epochs < 1) throw InvalidArgument("max_epochs must be at least 1");
  if (config.batch_size < 1) throw InvalidArgument("batch_size must be at least 1");
  if (config.k < 1) throw InvalidArgument("trajectory capacity must be at least 1");
  if (config.convergence.window < 2) throw InvalidArgument("convergence window must be >= 2");
  if (config.gen.n_examples_per_call < 1 ||
      config.gen.n_examples_per_call > config.batch_size) {
    throw InvalidArgument("examples per call must lie in [1, batch size]");
  }
  if (static_cast<int>(train.rows.size()) < 2 * config.gen.n_examples_per_call) {
    throw InvalidArgument("training table too small for the configured examples per call");
  }
}

Dag starting_structure(const Table& train, const RunConfig& config) {
  if (config.initial_structure) {
    if (config.initial_structure->nodes().size() != train.schema.columns.size()) {
      throw InvalidArgument("initial structure does not cover the schema columns");
    }
    return *config.initial_structure;
  }
  if (config.structure_from_data) return hill_climb(train, 3, 200, config.seed);
  return dag_from_schema(train.schema);
}

}  // namespace

RunResult run(const Table& train, const RunConfig& config, ChatClient& client) {
  train.schema.validate();
  validate_config(train, config);

  RunLogger logger(config.run_log_path);
  Dag structure = starting_structure(train, config);
  logger.header(config, structure, train.rows.size());

  DataGenProcess theta = make_initial_theta(train.schema, structure);
  FeatureEncoder encoder = FeatureEncoder::fit(train);
  DiscriminatorModel model = DiscriminatorModel::create(config.disc);

  Trajectory trajectory;
  trajectory.k = config.k;

  std::vector<std::string> columns;
  for (const auto& col : train.schema.columns) columns.push_back(col.name);

  RunResult result;
  result.initial_structure = structure;

  auto batches = batches_in_batch(train.rows, config.batch_size);
  std::optional<double> previous_score;
  int consecutive_skips = 0;
  int iteration = 0;
  bool stop = false;

  for (int epoch = 1; epoch <= config.max_epochs && !stop; ++epoch) {
    result.epochs_ran = epoch;
    for (size_t batch_index = 0; batch_index < batches.size() && !stop; ++batch_index) {
      theta.iteration = iteration;

      GenConfig gen = config.gen;
      gen.batch_size = config.batch_size;
      if (config.strive_line && previous_score) {
        gen.target_score_line = strive_line_for(*previous_score);
      }

      // Step 1: generate synthetic counterparts for this batch.
      SyntheticBatch synthetic;
      bool generation_failed = false;
      std::string failure_reason;
      try {
        synthetic = generate(theta, train.schema, batches[batch_index], client, gen);
      } catch (const GenerationError& e) {
        generation_failed = true;
        failure_reason = e.what();
      }
      if (!generation_failed && synthetic.rows.rows.empty()) {
        generation_failed = true;
        failure_reason = "no valid synthetic rows were produced";
      }
      if (generation_failed) {
        logger.skipped(epoch, static_cast<int>(batch_index), failure_reason);
        ++result.skipped_batches;
        if (++consecutive_skips >= 3) {
          throw Error("run aborted: three consecutive batches failed to generate (" +
                      failure_reason + ")");
        }
        ++iteration;
        continue;
      }
      consecutive_skips = 0;

      // Step 2: refresh the discriminator on a stratified real/synthetic split.
      Table combined;
      combined.schema = train.schema;
      combined.rows = batches[batch_index];
      combined.rows.insert(combined.rows.end(), synthetic.rows.rows.begin(),
                           synthetic.rows.rows.end());
      std::vector<int> labels(batches[batch_index].size(), 1);
      labels.insert(labels.end(), synthetic.rows.rows.size(), 0);

      FeatureMatrix features = encoder.transform(combined);
      auto split = stratified_split(labels, config.disc.test_fraction,
                                    mix_seed(config.seed, static_cast<uint64_t>(iteration)));

      FeatureMatrix train_features;
      train_features.columns = features.columns;
      train_features.normalization = features.normalization;
      std::vector<int> train_labels;
      for (int idx : split.train_idx) {
        train_features.rows.push_back(features.rows[idx]);
        train_labels.push_back(labels[idx]);
      }
      FeatureMatrix test_features;
      test_features.columns = features.columns;
      test_features.normalization = features.normalization;
      std::vector<int> test_labels;
      Table real_test;
      real_test.schema = train.schema;
      for (int idx : split.test_idx) {
        test_features.rows.push_back(features.rows[idx]);
        test_labels.push_back(labels[idx]);
        if (labels[idx] == 1) real_test.rows.push_back(combined.rows[idx]);
      }

      model = fit_update(std::move(model), train_features, train_labels);
      double score = evaluate(model, test_features, test_labels).accuracy;
      previous_score = score;

      // Step 3: extend the trajectory and ask for a revised process.
      ScoredCandidate candidate;
      candidate.theta = theta;
      candidate.synthetic_cache = synthetic.rows;
      candidate.adjusted_score = score;
      candidate.created_iteration = iteration;
      trajectory.candidates.push_back(std::move(candidate));
      trajectory = prune(rescore(std::move(trajectory), model, real_test, encoder));

      ChatRequest optimizer_prompt = build_optimizer_prompt(trajectory, columns);
      optimizer_prompt.max_tokens = config.gen.max_tokens;
      ThetaUpdate update;
      try {
        update = parse_theta_update(client.complete(optimizer_prompt), train.schema, theta);
      } catch (const ProviderError&) {
        update.theta = theta;
        update.parse_failed = true;
      }

      IterationLog log;
      log.epoch = epoch;
      log.batch_index = static_cast<int>(batch_index);
      log.score = score;
      log.theta_digest = theta_digest(theta);
      if (config.reference_dag) {
        log.ged_to_reference = ged(theta.causal, *config.reference_dag);
      }
      log.rejected = synthetic.rejected;
      log.copies_of_examples = synthetic.copies_of_examples;
      result.history.push_back(log);
      logger.iteration(log, theta, trajectory, update.parse_failed);

      theta = update.theta;
      ++iteration;
      theta.iteration = iteration;

      if (converged(result.history, config.convergence)) stop = true;
    }
  }

  if (trajectory.candidates.empty()) {
    throw Error("run produced no scored candidates; nothing to sample from");
  }
  auto best = std::min_element(
      trajectory.candidates.begin(), trajectory.candidates.end(),
      [](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.adjusted_score != b.adjusted_score) return a.adjusted_score < b.adjusted_score;
        return a.created_iteration > b.created_iteration;
      });

  result.final_theta = best->theta;
  result.trajectory = trajectory;
  result.model = model;

  GenConfig gen = config.gen;
  gen.batch_size = config.batch_size;
  auto final_batch = generate(result.final_theta, train.schema, train.rows, client, gen);
  result.synthetic = final_batch.rows;
  return result;
}

Table sample(const DataGenProcess& final_theta, const Table& train, int n,
             const std::optional<std::string>& condition, ChatClient& client,
             const GenConfig& config) {
  if (n < 1) throw InvalidArgument("sample count must be at least 1");
  if (train.rows.empty()) throw InvalidArgument("sampling needs a non-empty example table");

  Table out;
  out.schema = train.schema;
  size_t cursor = 0;
  const int budget = 10;
  for (int attempt = 0; attempt < budget && static_cast<int>(out.rows.size()) < n; ++attempt) {
    int remaining = n - static_cast<int>(out.rows.size());
    std::vector<Record> examples;
    examples.reserve(remaining);
    for (int i = 0; i < remaining; ++i) {
      examples.push_back(train.rows[cursor]);
      cursor = (cursor + 1) % train.rows.size();
    }
    SyntheticBatch batch;
    try {
      batch = generate(final_theta, train.schema, examples, client, config, condition);
    } catch (const GenerationError&) {
      continue;
    }
    for (auto& record : batch.rows.rows) {
      if (static_cast<int>(out.rows.size()) == n) break;
      out.rows.push_back(std::move(record));
    }
  }
  if (static_cast<int>(out.rows.size()) < n) {
    throw GenerationError("sampling retry budget exhausted before reaching " +
                          std::to_string(n) + " rows");
  }
  return out;
}

}  // namespace tabgan
