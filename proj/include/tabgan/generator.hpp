#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tabgan/dag.hpp"
#include "tabgan/llm_client.hpp"
#include "tabgan/table.hpp"

namespace tabgan {

// Text-encoded data-generation process: the evolving prompt state. A
// rendered generator prompt always carries the four blocks in the order
// context, schema, causal structure, task.
struct DataGenProcess {
  std::string context;
  std::string schema_text;
  Dag causal;
  std::string task;
  int iteration = 0;
};

struct GenConfig {
  int n_examples_per_call = 5;  // few-shot examples per chat call, 1..5
  double temperature = 0.5;
  int samples_per_call = 0;  // records requested per call; 0 means chunk size
  int batch_size = 50;
  std::optional<std::string> target_score_line;  // appended to the task block
  int max_tokens = 4096;
};

struct SyntheticBatch {
  Table rows;
  int rejected = 0;            // requested minus kept, over all calls
  int copies_of_examples = 0;  // kept rows identical to a prompt example
  int source_iteration = 0;
  std::vector<std::string> chunk_errors;  // one diagnostic per failed call
};

// Task instruction used for a fresh process before any optimization.
extern const std::string kDefaultTaskText;

std::string render_schema_text(const Schema& schema);
std::string render_categorical_text(const Schema& schema);

DataGenProcess make_initial_theta(const Schema& schema, Dag structure);

// Serialization of the process to/from a tagged text document with
// <context>, <schema>, <causal structure>, and <task> blocks.
std::string render_theta_text(const DataGenProcess& theta);
DataGenProcess parse_theta_text(const std::string& text, const Schema& schema);

// Builds the full generation prompt: system text with the five tagged blocks
// (context, schema, categorical variables, causal structure, task) and user
// text with the serialized examples plus the sampling instruction. A
// condition switches the instruction to its conditional variant.
ChatRequest render_generator_prompt(const DataGenProcess& theta, const Schema& schema,
                                    const std::vector<Record>& examples, int n_samples,
                                    const std::optional<std::string>& condition,
                                    const GenConfig& config);

// Splits a batch into consecutive chunks of n records (last may be short).
std::vector<std::vector<Record>> batches_in_batch(const std::vector<Record>& batch, int n);

// Row predicate compiled from `<column> <op> <value>` with op in
// {=, !=, <, <=, >, >=}. Categorical columns support = and != only.
// Returns nullopt for free-text conditions that do not match the grammar.
class CompiledCondition {
 public:
  bool matches(const Record& record) const;
  const std::string& text() const { return text_; }

  friend std::optional<CompiledCondition> compile_condition(const std::string& text,
                                                            const Schema& schema);

 private:
  std::string text_;
  int column_ = -1;
  ColumnKind kind_ = ColumnKind::numeric;
  std::string op_;
  double numeric_value_ = 0.0;
  std::string category_value_;
};

std::optional<CompiledCondition> compile_condition(const std::string& text, const Schema& schema);

// One chat call per chunk: requests samples_per_call records (default chunk
// size), parses and validates the output, retries a failed parse once with a
// corrective instruction, and collates kept rows in chunk order. Rows
// violating a compiled condition are dropped and counted as rejected.
// Throws GenerationError when every call fails.
SyntheticBatch generate(const DataGenProcess& theta, const Schema& schema,
                        const std::vector<Record>& batch, ChatClient& client,
                        const GenConfig& config,
                        const std::optional<std::string>& condition = std::nullopt);

}  // namespace tabgan
