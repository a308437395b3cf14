#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tabgan/discriminator.hpp"
#include "tabgan/generator.hpp"
#include "tabgan/llm_client.hpp"
#include "tabgan/table.hpp"

namespace tabgan {

// One prompt state together with the synthetic rows it produced and its
// score under the current discriminator (lower = harder to tell apart).
struct ScoredCandidate {
  DataGenProcess theta;
  Table synthetic_cache;  // never regenerated by rescoring
  double adjusted_score = 0.0;
  int created_iteration = 0;
};

// Candidate pool kept across iterations; pruning keeps the k best.
struct Trajectory {
  std::vector<ScoredCandidate> candidates;  // chronological order
  int k = 3;
};

// Refreshes every candidate's adjusted_score against the current model and
// held-out real rows. Caches are reused, never regenerated.
Trajectory rescore(Trajectory trajectory, const DiscriminatorModel& model,
                   const Table& real_test, const FeatureEncoder& encoder);

// Keeps the k candidates with the lowest adjusted_score (ties favor newer
// candidates); survivors stay in chronological order.
Trajectory prune(Trajectory trajectory);

// Meta-prompt asking for a revised prompt: instruction steps in the system
// text (with the schema's column list spliced in), one <pair> block per
// candidate ordered so the lowest-score candidate comes last, an aim line
// per pair, and a trailing completion cue. target_hint (a fraction) overrides
// the derived aim of best-score-minus-five-points.
ChatRequest build_optimizer_prompt(const Trajectory& trajectory,
                                   const std::vector<std::string>& columns,
                                   const std::optional<double>& target_hint = std::nullopt);

struct ThetaUpdate {
  DataGenProcess theta;
  bool parse_failed = false;     // nothing usable came back; theta == previous
  bool structure_updated = false;
  bool task_updated = false;
};

// Reads a revised process out of optimizer output: causal structure from a
// tagged block or any pair list in the text, task from a tagged block or the
// prose after the structure. Whatever is missing is inherited from
// `previous`; context and schema text are never altered.
ThetaUpdate parse_theta_update(const std::string& text, const Schema& schema,
                               const DataGenProcess& previous);

}  // namespace tabgan
