#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tabgan/table.hpp"

namespace tabgan {

// Directed acyclic graph over the columns of a schema. Nodes are always the
// full column set; only the edge set varies.
class Dag {
 public:
  Dag() = default;
  explicit Dag(std::vector<std::string> nodes);

  const std::vector<std::string>& nodes() const { return nodes_; }
  int node_index(const std::string& name) const;  // -1 when absent

  // Edges as (cause, effect) index pairs, kept sorted for determinism.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  bool has_edge(int from, int to) const;

  // Mutations keep the graph acyclic; violations throw InvalidArgument.
  void add_edge(int from, int to);
  void remove_edge(int from, int to);
  void reverse_edge(int from, int to);

  bool would_create_cycle(int from, int to) const;  // if (from, to) were added
  std::vector<int> parents(int node) const;
  std::vector<int> topological_order() const;

  bool operator==(const Dag&) const = default;

 private:
  std::vector<std::string> nodes_;
  std::vector<std::pair<int, int>> edges_;
};

Dag dag_from_schema(const Schema& schema);

// Edge list as quoted pairs: [('smoking', 'lung cancer'), ('age', 'income')].
// Edges render in sorted (cause, effect) index order; an empty graph renders
// as [].
std::string to_pairs_text(const Dag& dag);

// Recovers a Dag over the schema's columns from pair-list text. Tolerates
// surrounding prose, single or double quotes, and (...) or [...] pair
// delimiters. Pairs naming unknown columns and pairs that would create a
// cycle (later-listed loses) are dropped, counted in *warnings when given.
// Throws ParseError when non-empty input contains no pair structure and is
// not the literal empty list.
Dag parse_pairs_text(const std::string& text, const Schema& schema, int* warnings = nullptr);

// Graphviz rendering for inspection.
std::string to_dot(const Dag& dag);

// Graph edit distance between DAGs on the same node set: the number of edge
// additions, deletions, and reversals turning `a` into `b`, a reversal
// counting 1. Equals the structural Hamming distance.
int ged(const Dag& a, const Dag& b);

// Bayesian-network fit score of `dag` for the table: sum over nodes of the
// log-likelihood given discretized parents minus (ln n / 2) times the free
// parameter count. Numeric columns use up to four equal-frequency bins.
// Larger is better; decomposes exactly into per-node family scores.
double bic_score(const Dag& dag, const Table& table);

// Greedy best-improvement search over single-edge additions, deletions, and
// reversals starting from the empty graph, maximizing bic_score under a
// parent-count cap. Equal-gain moves break on the lowest (cause, effect)
// index pair, so the result does not depend on the seed; the parameter is
// kept for interface stability.
Dag hill_climb(const Table& table, int max_parents = 3, int max_iters = 200, uint64_t seed = 0);

}  // namespace tabgan
