#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tabgan/dag.hpp"
#include "tabgan/discriminator.hpp"
#include "tabgan/generator.hpp"
#include "tabgan/llm_client.hpp"
#include "tabgan/optimizer.hpp"
#include "tabgan/table.hpp"

namespace tabgan {

struct ConvergenceConfig {
  int window = 3;      // trailing scores compared for flatness
  double epsilon = 0.02;
  double floor = 0.55;  // stop once the discriminator is near chance
};

struct RunConfig {
  int max_epochs = 10;
  int batch_size = 50;
  GenConfig gen;
  DiscriminatorConfig disc;
  int k = 3;  // trajectory capacity
  uint64_t seed = 0;
  ConvergenceConfig convergence;
  std::optional<Dag> reference_dag;       // enables edit-distance tracking
  std::optional<Dag> initial_structure;   // overrides the hill-climb start
  bool structure_from_data = true;        // false (and no override): empty start
  bool strive_line = true;                // thread the previous score into the task
  std::string run_log_path;               // empty disables the JSONL run log
};

struct IterationLog {
  int epoch = 0;        // 1-based
  int batch_index = 0;  // 0-based within the epoch
  double score = 0.0;   // discriminator accuracy on the held-out split
  std::string theta_digest;
  std::optional<int> ged_to_reference;
  int rejected = 0;
  int copies_of_examples = 0;

  friend bool operator==(const IterationLog&, const IterationLog&) = default;
};

struct RunResult {
  DataGenProcess final_theta;
  Table synthetic;  // regenerated from the best process over the full train set
  std::vector<IterationLog> history;
  Trajectory trajectory;
  DiscriminatorModel model;
  Dag initial_structure;
  int epochs_ran = 0;
  int skipped_batches = 0;
};

// True once the trailing `window` scores span less than epsilon, or the
// latest score is at or below the floor.
bool converged(const std::vector<IterationLog>& history, const ConvergenceConfig& convergence);

// Full adversarial loop: per batch, generate synthetic rows, refresh the
// discriminator on a stratified real/synthetic split, then ask the optimizer
// for a revised process. Stops at max_epochs or convergence; the returned
// synthetic table is regenerated from the best-scoring process.
RunResult run(const Table& train, const RunConfig& config, ChatClient& client);

// Inference-time sampling: exactly n validated rows from the final process,
// with few-shot examples drawn round-robin from train. Throws
// GenerationError when the retry budget runs out before n rows arrive.
Table sample(const DataGenProcess& final_theta, const Table& train, int n,
             const std::optional<std::string>& condition, ChatClient& client,
             const GenConfig& config);

}  // namespace tabgan
