#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include "tabgan/dag.hpp"
#include "tabgan/llm_client.hpp"
#include "tabgan/table.hpp"

namespace tabgan {

// One conditional distribution row: parent category values (in declared
// parent order) and the probability of each of the node's categories.
struct CptRow {
  std::vector<std::string> given;
  std::vector<double> p;
};

struct NodeCpt {
  std::string node;
  std::vector<std::string> parents;
  std::vector<CptRow> rows;  // must cover every parent configuration
};

struct EdgeEdit {
  enum class Op { add, remove, reverse };
  Op op = Op::add;
  std::string from;
  std::string to;
};

// Deterministic offline backend state: a ground-truth Bayesian network over
// an all-categorical schema plus a scripted sequence of edge edits the mock
// optimizer walks through. Columns must all be categorical so the joint
// distribution is exact.
struct MockWorld {
  Schema schema;
  Dag ground_truth;
  std::vector<NodeCpt> cpts;
  std::vector<EdgeEdit> optimizer_script;
  uint64_t seed = 0;
  int script_cursor = 0;  // advanced by mock_optimize

  void validate() const;  // throws SchemaError / InvalidArgument
  static MockWorld from_json(const std::string& text);
  static MockWorld load(const std::string& path);
};

// Exact joint distribution of the world's network, enumerated over all
// category combinations in schema column order.
class JointDistribution {
 public:
  explicit JointDistribution(const MockWorld& world);

  const std::vector<int>& radices() const { return radices_; }
  double probability(const std::vector<int>& states) const;

  std::vector<double> marginal(int node) const;
  // Distribution of `node` given parent columns fixed at parent_states.
  // Zero-mass parent configurations fall back to the marginal.
  std::vector<double> conditional(int node, const std::vector<int>& parents,
                                  const std::vector<int>& parent_states) const;

 private:
  std::vector<int> radices_;
  std::vector<int> strides_;
  std::vector<double> joint_;
};

// Ancestral sampling from the ground-truth network; used to build the "real"
// datasets for offline experiments.
Table sample_world(const MockWorld& world, int n, uint64_t seed);

// Deterministic generator backend: samples records from the world's joint
// re-factored along the causal graph parsed out of the request, so fidelity
// improves as the graph approaches ground truth. When the prompt carries at
// least 20 examples, CPTs are re-fit from them instead (Laplace smoothing).
// Output depends only on (world seed, request text).
std::string mock_generate(const MockWorld& world, const ChatRequest& request);

// Deterministic optimizer backend: applies the script prefix [0..cursor] to
// the best (last-listed) pair block's graph, advances the cursor, and emits
// a tagged <Causal structure>/<Task> document. An exhausted script echoes
// the best input unchanged.
std::string mock_optimize(MockWorld& world, const ChatRequest& request);

// ChatClient facade routing requests to mock_generate or mock_optimize by
// their system-text preamble. Calls are serialized internally.
class MockClient : public ChatClient {
 public:
  explicit MockClient(MockWorld world) : world_(std::move(world)) { world_.validate(); }

  std::string complete(const ChatRequest& request) override;
  const MockWorld& world() const { return world_; }

 private:
  MockWorld world_;
  std::mutex mutex_;
};

}  // namespace tabgan
