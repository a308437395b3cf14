#include "tabgan/dag.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <set>

#include "tabgan/errors.hpp"
#include "tabgan/text_util.hpp"

namespace tabgan {

Dag::Dag(std::vector<std::string> nodes) : nodes_(std::move(nodes)) {
  std::set<std::string> seen(nodes_.begin(), nodes_.end());
  if (seen.size() != nodes_.size()) throw InvalidArgument("duplicate node names");
}

int Dag::node_index(const std::string& name) const {
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

bool Dag::has_edge(int from, int to) const {
  return std::binary_search(edges_.begin(), edges_.end(), std::make_pair(from, to));
}

void Dag::add_edge(int from, int to) {
  const int n = static_cast<int>(nodes_.size());
  if (from < 0 || from >= n || to < 0 || to >= n) throw InvalidArgument("edge endpoint out of range");
  if (from == to) throw InvalidArgument("self-loop on node " + nodes_[from]);
  if (has_edge(from, to)) throw InvalidArgument("edge already present");
  if (would_create_cycle(from, to)) {
    throw InvalidArgument("edge " + nodes_[from] + " -> " + nodes_[to] + " would create a cycle");
  }
  edges_.insert(std::upper_bound(edges_.begin(), edges_.end(), std::make_pair(from, to)),
                {from, to});
}

void Dag::remove_edge(int from, int to) {
  auto it = std::lower_bound(edges_.begin(), edges_.end(), std::make_pair(from, to));
  if (it == edges_.end() || *it != std::make_pair(from, to)) {
    throw InvalidArgument("no such edge to remove");
  }
  edges_.erase(it);
}

void Dag::reverse_edge(int from, int to) {
  remove_edge(from, to);
  if (would_create_cycle(to, from)) {
    edges_.insert(std::upper_bound(edges_.begin(), edges_.end(), std::make_pair(from, to)),
                  {from, to});
    throw InvalidArgument("reversing " + nodes_[from] + " -> " + nodes_[to] +
                          " would create a cycle");
  }
  add_edge(to, from);
}

bool Dag::would_create_cycle(int from, int to) const {
  if (from == to) return true;
  // A cycle appears iff `from` is reachable from `to`.
  std::vector<char> visited(nodes_.size(), 0);
  std::deque<int> frontier{to};
  visited[to] = 1;
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop_front();
    if (u == from) return true;
    for (const auto& [a, b] : edges_) {
      if (a == u && !visited[b]) {
        visited[b] = 1;
        frontier.push_back(b);
      }
    }
  }
  return false;
}

std::vector<int> Dag::parents(int node) const {
  std::vector<int> out;
  for (const auto& [a, b] : edges_) {
    if (b == node) out.push_back(a);
  }
  return out;
}

std::vector<int> Dag::topological_order() const {
  const int n = static_cast<int>(nodes_.size());
  std::vector<int> indegree(n, 0);
  for (const auto& [a, b] : edges_) {
    (void)a;
    ++indegree[b];
  }
  std::vector<int> order;
  std::set<int> ready;
  for (int i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.insert(i);
  }
  while (!ready.empty()) {
    int u = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(u);
    for (const auto& [a, b] : edges_) {
      if (a == u && --indegree[b] == 0) ready.insert(b);
    }
  }
  if (static_cast<int>(order.size()) != n) throw InvalidArgument("graph contains a cycle");
  return order;
}

Dag dag_from_schema(const Schema& schema) {
  std::vector<std::string> nodes;
  nodes.reserve(schema.columns.size());
  for (const auto& col : schema.columns) nodes.push_back(col.name);
  return Dag(std::move(nodes));
}

std::string to_pairs_text(const Dag& dag) {
  std::vector<std::string> parts;
  parts.reserve(dag.edges().size());
  for (const auto& [a, b] : dag.edges()) {
    parts.push_back("('" + dag.nodes()[a] + "', '" + dag.nodes()[b] + "')");
  }
  return "[" + join(parts, ", ") + "]";
}

namespace {

// Reads a quoted name starting at text[i] (which must be a quote char).
// Returns the name and advances i past the closing quote, or nullopt.
std::optional<std::string> read_quoted(const std::string& text, size_t& i) {
  char q = text[i];
  size_t j = i + 1;
  std::string out;
  while (j < text.size() && text[j] != q) out += text[j++];
  if (j >= text.size()) return std::nullopt;
  i = j + 1;
  return out;
}

void skip_ws(const std::string& text, size_t& i) {
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
}

// Attempts to read ('name1', 'name2') or ['name1', 'name2'] at position i.
std::optional<std::pair<std::string, std::string>> read_pair(const std::string& text, size_t i) {
  char open = text[i];
  char close = open == '(' ? ')' : ']';
  ++i;
  skip_ws(text, i);
  if (i >= text.size() || (text[i] != '\'' && text[i] != '"')) return std::nullopt;
  auto first = read_quoted(text, i);
  if (!first) return std::nullopt;
  skip_ws(text, i);
  if (i >= text.size() || text[i] != ',') return std::nullopt;
  ++i;
  skip_ws(text, i);
  if (i >= text.size() || (text[i] != '\'' && text[i] != '"')) return std::nullopt;
  auto second = read_quoted(text, i);
  if (!second) return std::nullopt;
  skip_ws(text, i);
  if (i >= text.size() || text[i] != close) return std::nullopt;
  return std::make_pair(*first, *second);
}

int match_node(const Schema& schema, const std::string& raw) {
  std::string name = trim(raw);
  int idx = schema.column_index(name);
  if (idx >= 0) return idx;
  const std::string lower = to_lower(name);
  for (size_t i = 0; i < schema.columns.size(); ++i) {
    if (to_lower(schema.columns[i].name) == lower) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

Dag parse_pairs_text(const std::string& text, const Schema& schema, int* warnings) {
  int warn = 0;
  std::vector<std::pair<std::string, std::string>> raw_pairs;
  for (size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '(' && text[i] != '[') continue;
    if (auto p = read_pair(text, i)) raw_pairs.push_back(std::move(*p));
  }

  Dag dag = dag_from_schema(schema);
  if (raw_pairs.empty()) {
    std::string t = trim(text);
    bool empty_list = t == "[]" || t == "[ ]" || t.empty();
    if (!empty_list && text.find("[]") != std::string::npos) empty_list = true;
    if (!empty_list) throw ParseError("no causal pairs found in text");
    if (warnings) *warnings = 0;
    return dag;
  }

  for (const auto& [from_name, to_name] : raw_pairs) {
    int from = match_node(schema, from_name);
    int to = match_node(schema, to_name);
    if (from < 0 || to < 0 || from == to) {
      ++warn;
      continue;
    }
    if (dag.has_edge(from, to)) continue;
    if (dag.would_create_cycle(from, to)) {
      ++warn;
      continue;
    }
    dag.add_edge(from, to);
  }
  if (warnings) *warnings = warn;
  return dag;
}

std::string to_dot(const Dag& dag) {
  std::string out = "digraph g {\n";
  for (const auto& node : dag.nodes()) out += "  \"" + node + "\";\n";
  for (const auto& [a, b] : dag.edges()) {
    out += "  \"" + dag.nodes()[a] + "\" -> \"" + dag.nodes()[b] + "\";\n";
  }
  out += "}\n";
  return out;
}

int ged(const Dag& a, const Dag& b) {
  if (a.nodes() != b.nodes()) throw InvalidArgument("ged needs identical node sets");
  std::set<std::pair<int, int>> ea(a.edges().begin(), a.edges().end());
  std::set<std::pair<int, int>> eb(b.edges().begin(), b.edges().end());
  int distance = 0;
  for (const auto& e : ea) {
    if (eb.count(e)) continue;
    ++distance;  // reversal or deletion, either way one edit
  }
  for (const auto& e : eb) {
    if (ea.count(e)) continue;
    if (ea.count({e.second, e.first})) continue;  // already counted as reversal
    ++distance;
  }
  return distance;
}

namespace {

struct Discretized {
  std::vector<std::vector<int>> states;  // row-major, per column
  std::vector<int> radices;              // states per column
};

Discretized discretize(const Table& table) {
  const size_t cols = table.schema.columns.size();
  Discretized d;
  d.states.assign(table.rows.size(), std::vector<int>(cols, 0));
  d.radices.assign(cols, 1);
  for (size_t c = 0; c < cols; ++c) {
    const auto& col = table.schema.columns[c];
    if (col.kind == ColumnKind::categorical) {
      d.radices[c] = static_cast<int>(col.categories.size());
      for (size_t r = 0; r < table.rows.size(); ++r) {
        const auto& v = std::get<std::string>(table.rows[r].values[c]);
        d.states[r][c] = static_cast<int>(
            std::find(col.categories.begin(), col.categories.end(), v) - col.categories.begin());
      }
    } else {
      std::vector<double> sorted;
      sorted.reserve(table.rows.size());
      for (const auto& row : table.rows) sorted.push_back(std::get<double>(row.values[c]));
      std::sort(sorted.begin(), sorted.end());
      std::vector<double> cuts;
      for (int k = 1; k < 4; ++k) {
        double cut = sorted[sorted.size() * k / 4];
        if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
      }
      while (!cuts.empty() && cuts.back() >= sorted.back()) cuts.pop_back();
      d.radices[c] = static_cast<int>(cuts.size()) + 1;
      for (size_t r = 0; r < table.rows.size(); ++r) {
        double v = std::get<double>(table.rows[r].values[c]);
        int bin = static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
        d.states[r][c] = bin;
      }
    }
  }
  return d;
}

// Log-likelihood minus BIC penalty for one node given its parent set.
double family_score(const Discretized& d, int node, const std::vector<int>& parents) {
  const double n = static_cast<double>(d.states.size());
  std::map<std::vector<int>, std::vector<int>> counts;
  for (const auto& row : d.states) {
    std::vector<int> key;
    key.reserve(parents.size());
    for (int p : parents) key.push_back(row[p]);
    auto& cell = counts[key];
    if (cell.empty()) cell.assign(d.radices[node], 0);
    ++cell[row[node]];
  }
  double ll = 0.0;
  for (const auto& [key, cell] : counts) {
    int total = 0;
    for (int c : cell) total += c;
    for (int c : cell) {
      if (c > 0) ll += c * std::log(static_cast<double>(c) / total);
    }
  }
  double q = 1.0;
  for (int p : parents) q *= d.radices[p];
  double penalty = 0.5 * std::log(n) * (d.radices[node] - 1) * q;
  return ll - penalty;
}

std::string family_key(int node, std::vector<int> parents) {
  std::sort(parents.begin(), parents.end());
  std::string key = std::to_string(node) + "|";
  for (int p : parents) key += std::to_string(p) + ",";
  return key;
}

}  // namespace

double bic_score(const Dag& dag, const Table& table) {
  if (table.rows.empty()) throw InvalidArgument("bic_score needs a non-empty table");
  for (const auto& node : dag.nodes()) {
    if (table.schema.column_index(node) < 0) {
      throw InvalidArgument("dag node '" + node + "' is not a table column");
    }
  }
  Discretized d = discretize(table);
  double score = 0.0;
  for (size_t node = 0; node < dag.nodes().size(); ++node) {
    int col = table.schema.column_index(dag.nodes()[node]);
    std::vector<int> parents;
    for (int p : dag.parents(static_cast<int>(node))) {
      parents.push_back(table.schema.column_index(dag.nodes()[p]));
    }
    std::sort(parents.begin(), parents.end());
    score += family_score(d, col, parents);
  }
  return score;
}

Dag hill_climb(const Table& table, int max_parents, int max_iters, uint64_t seed) {
  (void)seed;
  if (table.schema.columns.size() < 2) return dag_from_schema(table.schema);
  if (table.rows.empty()) throw InvalidArgument("hill_climb needs at least one row");

  Discretized d = discretize(table);
  const int n = static_cast<int>(table.schema.columns.size());
  Dag g = dag_from_schema(table.schema);

  std::map<std::string, double> memo;
  auto fam = [&](int node, std::vector<int> parents) {
    std::string key = family_key(node, parents);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    std::sort(parents.begin(), parents.end());
    double s = family_score(d, node, parents);
    memo.emplace(std::move(key), s);
    return s;
  };

  const double eps = 1e-9;
  // Score-equivalent moves (e.g. either orientation of a lone edge) have
  // mathematically equal gains that differ only in floating-point rounding;
  // a tolerance keeps the documented lowest-index tie-break in charge.
  auto better = [](double gain, double incumbent) {
    double tol = 1e-9 * (std::abs(gain) + std::abs(incumbent) + 1.0);
    return gain > incumbent + tol;
  };
  for (int iter = 0; iter < max_iters; ++iter) {
    double best_gain = eps;
    int best_move = -1;  // 0 add, 1 delete, 2 reverse
    std::pair<int, int> best_edge{-1, -1};

    for (int from = 0; from < n; ++from) {
      for (int to = 0; to < n; ++to) {
        if (from == to) continue;
        std::vector<int> to_parents = g.parents(to);

        if (!g.has_edge(from, to) && !g.has_edge(to, from) &&
            static_cast<int>(to_parents.size()) < max_parents &&
            !g.would_create_cycle(from, to)) {
          std::vector<int> grown = to_parents;
          grown.push_back(from);
          double gain = fam(to, grown) - fam(to, to_parents);
          if (better(gain, best_gain)) {
            best_gain = gain;
            best_move = 0;
            best_edge = {from, to};
          }
        }

        if (g.has_edge(from, to)) {
          std::vector<int> shrunk;
          for (int p : to_parents) {
            if (p != from) shrunk.push_back(p);
          }
          double gain = fam(to, shrunk) - fam(to, to_parents);
          if (better(gain, best_gain)) {
            best_gain = gain;
            best_move = 1;
            best_edge = {from, to};
          }

          std::vector<int> from_parents = g.parents(from);
          if (static_cast<int>(from_parents.size()) < max_parents) {
            Dag probe = g;
            probe.remove_edge(from, to);
            if (!probe.would_create_cycle(to, from)) {
              std::vector<int> from_grown = from_parents;
              from_grown.push_back(to);
              double rev_gain = fam(to, shrunk) + fam(from, from_grown) -
                                fam(to, to_parents) - fam(from, from_parents);
              if (better(rev_gain, best_gain)) {
                best_gain = rev_gain;
                best_move = 2;
                best_edge = {from, to};
              }
            }
          }
        }
      }
    }

    if (best_move < 0) break;
    if (best_move == 0) g.add_edge(best_edge.first, best_edge.second);
    else if (best_move == 1) g.remove_edge(best_edge.first, best_edge.second);
    else g.reverse_edge(best_edge.first, best_edge.second);
  }
  return g;
}

}  // namespace tabgan
