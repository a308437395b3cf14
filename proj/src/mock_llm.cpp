#include "tabgan/mock_llm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <random>

#include <json.hpp>

#include "tabgan/errors.hpp"
#include "tabgan/generator.hpp"
#include "tabgan/text_util.hpp"

namespace tabgan {

namespace {

constexpr size_t kJointSizeCap = 1u << 20;

int category_index(const ColumnSpec& col, const std::string& value) {
  auto it = std::find(col.categories.begin(), col.categories.end(), value);
  return it == col.categories.end() ? -1 : static_cast<int>(it - col.categories.begin());
}

int draw_categorical(const std::vector<double>& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  double cumulative = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    cumulative += p[i];
    if (x < cumulative) return static_cast<int>(i);
  }
  return static_cast<int>(p.size()) - 1;
}

// Per-node CPT with parent states resolved to column/category indices.
struct ResolvedCpt {
  std::vector<int> parent_cols;
  std::map<std::vector<int>, const CptRow*> rows;
};

ResolvedCpt resolve_cpt(const MockWorld& world, const NodeCpt& cpt) {
  ResolvedCpt out;
  for (const auto& parent : cpt.parents) {
    out.parent_cols.push_back(world.schema.column_index(parent));
  }
  for (const auto& row : cpt.rows) {
    std::vector<int> key;
    key.reserve(row.given.size());
    for (size_t i = 0; i < row.given.size(); ++i) {
      key.push_back(
          category_index(world.schema.columns[out.parent_cols[i]], row.given[i]));
    }
    out.rows[key] = &row;
  }
  return out;
}

}  // namespace

void MockWorld::validate() const {
  schema.validate();
  for (const auto& col : schema.columns) {
    if (col.kind != ColumnKind::categorical) {
      throw SchemaError("mock worlds need all-categorical columns, '" + col.name + "' is not");
    }
  }
  std::vector<std::string> names;
  for (const auto& col : schema.columns) names.push_back(col.name);
  if (ground_truth.nodes() != names) {
    throw InvalidArgument("ground-truth graph nodes must equal schema columns in order");
  }

  size_t joint_size = 1;
  for (const auto& col : schema.columns) {
    joint_size *= col.categories.size();
    if (joint_size > kJointSizeCap) {
      throw InvalidArgument("mock world joint distribution too large to enumerate");
    }
  }

  if (cpts.size() != schema.columns.size()) {
    throw InvalidArgument("mock world needs exactly one CPT per column");
  }
  for (const auto& cpt : cpts) {
    int node = schema.column_index(cpt.node);
    if (node < 0) throw InvalidArgument("CPT names unknown column '" + cpt.node + "'");
    const auto& col = schema.columns[node];

    auto gt_parents = ground_truth.parents(node);
    std::vector<std::string> gt_names;
    for (int p : gt_parents) gt_names.push_back(schema.columns[p].name);
    std::vector<std::string> declared = cpt.parents;
    std::sort(gt_names.begin(), gt_names.end());
    std::sort(declared.begin(), declared.end());
    if (gt_names != declared) {
      throw InvalidArgument("CPT parents for '" + cpt.node +
                            "' do not match the ground-truth graph");
    }

    size_t combos = 1;
    for (const auto& parent : cpt.parents) {
      combos *= schema.column(parent).categories.size();
    }
    if (cpt.rows.size() != combos) {
      throw InvalidArgument("CPT for '" + cpt.node + "' must cover every parent configuration");
    }
    std::map<std::vector<std::string>, int> seen;
    for (const auto& row : cpt.rows) {
      if (row.given.size() != cpt.parents.size()) {
        throw InvalidArgument("CPT row arity mismatch for '" + cpt.node + "'");
      }
      for (size_t i = 0; i < row.given.size(); ++i) {
        if (category_index(schema.column(cpt.parents[i]), row.given[i]) < 0) {
          throw InvalidArgument("CPT row for '" + cpt.node + "' uses unknown parent value '" +
                                row.given[i] + "'");
        }
      }
      if (++seen[row.given] > 1) {
        throw InvalidArgument("CPT for '" + cpt.node + "' repeats a parent configuration");
      }
      if (row.p.size() != col.categories.size()) {
        throw InvalidArgument("CPT row for '" + cpt.node + "' has wrong distribution size");
      }
      double total = 0.0;
      for (double v : row.p) {
        if (v < 0.0) throw InvalidArgument("negative probability in CPT for '" + cpt.node + "'");
        total += v;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw InvalidArgument("CPT row for '" + cpt.node + "' does not sum to 1");
      }
    }
  }

  for (const auto& edit : optimizer_script) {
    if (schema.column_index(edit.from) < 0 || schema.column_index(edit.to) < 0) {
      throw InvalidArgument("optimizer script references unknown column");
    }
  }
  if (script_cursor < 0) throw InvalidArgument("script cursor cannot be negative");
}

MockWorld MockWorld::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParseError("mock world file is not valid JSON");

  MockWorld world;
  world.seed = j.value("seed", 0ull);
  world.schema = schema_from_json(j.at("schema").dump());
  world.ground_truth = dag_from_schema(world.schema);
  for (const auto& edge : j.value("ground_truth", nlohmann::json::array())) {
    int from = world.schema.column_index(edge.at(0).get<std::string>());
    int to = world.schema.column_index(edge.at(1).get<std::string>());
    if (from < 0 || to < 0) throw ParseError("ground-truth edge names unknown column");
    world.ground_truth.add_edge(from, to);
  }
  for (const auto& c : j.at("cpts")) {
    NodeCpt cpt;
    cpt.node = c.at("node").get<std::string>();
    for (const auto& p : c.value("parents", nlohmann::json::array())) {
      cpt.parents.push_back(p.get<std::string>());
    }
    for (const auto& r : c.at("rows")) {
      CptRow row;
      for (const auto& g : r.value("given", nlohmann::json::array())) {
        row.given.push_back(g.get<std::string>());
      }
      row.p = r.at("p").get<std::vector<double>>();
      cpt.rows.push_back(std::move(row));
    }
    world.cpts.push_back(std::move(cpt));
  }
  for (const auto& e : j.value("optimizer_script", nlohmann::json::array())) {
    EdgeEdit edit;
    std::string op = e.at("op").get<std::string>();
    if (op == "add") edit.op = EdgeEdit::Op::add;
    else if (op == "remove") edit.op = EdgeEdit::Op::remove;
    else if (op == "reverse") edit.op = EdgeEdit::Op::reverse;
    else throw ParseError("unknown optimizer script op: " + op);
    edit.from = e.at("from").get<std::string>();
    edit.to = e.at("to").get<std::string>();
    world.optimizer_script.push_back(std::move(edit));
  }
  world.validate();
  return world;
}

MockWorld MockWorld::load(const std::string& path) { return from_json(read_file(path)); }

JointDistribution::JointDistribution(const MockWorld& world) {
  const auto& schema = world.schema;
  const size_t cols = schema.columns.size();
  radices_.resize(cols);
  for (size_t c = 0; c < cols; ++c) {
    radices_[c] = static_cast<int>(schema.columns[c].categories.size());
  }
  strides_.assign(cols, 1);
  for (int c = static_cast<int>(cols) - 2; c >= 0; --c) {
    strides_[c] = strides_[c + 1] * radices_[c + 1];
  }
  size_t total = static_cast<size_t>(strides_[0]) * radices_[0];

  std::vector<ResolvedCpt> resolved;
  std::vector<int> node_of_cpt;
  resolved.reserve(world.cpts.size());
  for (const auto& cpt : world.cpts) {
    resolved.push_back(resolve_cpt(world, cpt));
    node_of_cpt.push_back(schema.column_index(cpt.node));
  }

  joint_.assign(total, 0.0);
  std::vector<int> states(cols, 0);
  for (size_t cell = 0; cell < total; ++cell) {
    double p = 1.0;
    for (size_t k = 0; k < resolved.size(); ++k) {
      std::vector<int> key;
      key.reserve(resolved[k].parent_cols.size());
      for (int pc : resolved[k].parent_cols) key.push_back(states[pc]);
      const CptRow* row = resolved[k].rows.at(key);
      p *= row->p[states[node_of_cpt[k]]];
    }
    joint_[cell] = p;

    for (int c = static_cast<int>(cols) - 1; c >= 0; --c) {
      if (++states[c] < radices_[c]) break;
      states[c] = 0;
    }
  }
}

double JointDistribution::probability(const std::vector<int>& states) const {
  size_t idx = 0;
  for (size_t c = 0; c < states.size(); ++c) idx += static_cast<size_t>(states[c]) * strides_[c];
  return joint_[idx];
}

std::vector<double> JointDistribution::marginal(int node) const {
  std::vector<double> out(radices_[node], 0.0);
  const size_t cols = radices_.size();
  std::vector<int> states(cols, 0);
  for (size_t cell = 0; cell < joint_.size(); ++cell) {
    out[states[node]] += joint_[cell];
    for (int c = static_cast<int>(cols) - 1; c >= 0; --c) {
      if (++states[c] < radices_[c]) break;
      states[c] = 0;
    }
  }
  return out;
}

std::vector<double> JointDistribution::conditional(int node, const std::vector<int>& parents,
                                                   const std::vector<int>& parent_states) const {
  std::vector<double> out(radices_[node], 0.0);
  const size_t cols = radices_.size();
  std::vector<int> states(cols, 0);
  for (size_t cell = 0; cell < joint_.size(); ++cell) {
    bool match = true;
    for (size_t i = 0; i < parents.size(); ++i) {
      if (states[parents[i]] != parent_states[i]) {
        match = false;
        break;
      }
    }
    if (match) out[states[node]] += joint_[cell];
    for (int c = static_cast<int>(cols) - 1; c >= 0; --c) {
      if (++states[c] < radices_[c]) break;
      states[c] = 0;
    }
  }
  double total = 0.0;
  for (double v : out) total += v;
  if (total <= 0.0) return marginal(node);
  for (double& v : out) v /= total;
  return out;
}

Table sample_world(const MockWorld& world, int n, uint64_t seed) {
  world.validate();
  std::vector<ResolvedCpt> resolved(world.schema.columns.size());
  for (const auto& cpt : world.cpts) {
    resolved[world.schema.column_index(cpt.node)] = resolve_cpt(world, cpt);
  }
  auto order = world.ground_truth.topological_order();
  std::mt19937_64 rng(seed);

  Table table;
  table.schema = world.schema;
  for (int i = 0; i < n; ++i) {
    std::vector<int> states(world.schema.columns.size(), -1);
    for (int node : order) {
      std::vector<int> key;
      for (int pc : resolved[node].parent_cols) key.push_back(states[pc]);
      states[node] = draw_categorical(resolved[node].rows.at(key)->p, rng);
    }
    Record rec;
    for (size_t c = 0; c < states.size(); ++c) {
      rec.values.emplace_back(world.schema.columns[c].categories[states[c]]);
    }
    table.rows.push_back(std::move(rec));
  }
  return table;
}

namespace {

// Requested record count: digits following the word "Generate".
int parse_requested_count(const std::string& user) {
  size_t pos = user.find("Generate ");
  while (pos != std::string::npos) {
    size_t i = pos + 9;
    while (i < user.size() && user[i] == ' ') ++i;
    if (i < user.size() && std::isdigit(static_cast<unsigned char>(user[i]))) {
      int n = 0;
      while (i < user.size() && std::isdigit(static_cast<unsigned char>(user[i]))) {
        n = n * 10 + (user[i] - '0');
        ++i;
      }
      return std::max(1, n);
    }
    pos = user.find("Generate ", pos + 1);
  }
  return 1;
}

std::optional<std::string> parse_condition_text(const std::string& user) {
  const std::string marker = "synthetic samples with ";
  size_t begin = user.find(marker);
  if (begin == std::string::npos) return std::nullopt;
  begin += marker.size();
  size_t end = user.find(". Response", begin);
  if (end == std::string::npos) return std::nullopt;
  return user.substr(begin, end - begin);
}

// CPTs re-fit from prompt examples with Laplace smoothing.
struct ExampleCpts {
  std::map<std::pair<int, std::vector<int>>, std::vector<double>> table;
};

std::vector<double> example_conditional(const Schema& schema, const std::vector<Record>& examples,
                                        int node, const std::vector<int>& parents,
                                        const std::vector<int>& parent_states) {
  const auto& col = schema.columns[node];
  std::vector<double> counts(col.categories.size(), 1.0);  // Laplace prior
  for (const auto& rec : examples) {
    bool match = true;
    for (size_t i = 0; i < parents.size(); ++i) {
      const auto& pcol = schema.columns[parents[i]];
      if (category_index(pcol, std::get<std::string>(rec.values[parents[i]])) !=
          parent_states[i]) {
        match = false;
        break;
      }
    }
    if (!match) continue;
    int state = category_index(col, std::get<std::string>(rec.values[node]));
    if (state >= 0) counts[state] += 1.0;
  }
  double total = 0.0;
  for (double v : counts) total += v;
  for (double& v : counts) v /= total;
  return counts;
}

}  // namespace

std::string mock_generate(const MockWorld& world, const ChatRequest& request) {
  const Schema& schema = world.schema;
  const int requested = parse_requested_count(request.user);

  std::optional<CompiledCondition> condition;
  if (auto cond_text = parse_condition_text(request.user)) {
    condition = compile_condition(*cond_text, schema);
  }

  Dag graph = dag_from_schema(schema);
  if (auto block = extract_tag_block(request.system, "causal structure")) {
    try {
      graph = parse_pairs_text(*block, schema);
    } catch (const ParseError&) {
      graph = dag_from_schema(schema);  // worst case: independent marginals
    }
  }

  std::vector<Record> examples;
  if (auto block = extract_tag_block(request.user, "example")) {
    try {
      examples = parse_records(*block, schema).records;
    } catch (const ParseError&) {
    }
  }
  const bool refit_from_examples = examples.size() >= 20;

  JointDistribution joint(world);
  auto order = graph.topological_order();
  std::mt19937_64 rng(mix_seed(world.seed, fnv1a64(request.system + '\x1f' + request.user)));

  std::vector<Record> out;
  out.reserve(requested);
  for (int i = 0; i < requested; ++i) {
    Record candidate;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      std::vector<int> states(schema.columns.size(), -1);
      for (int node : order) {
        std::vector<int> parents = graph.parents(node);
        std::vector<int> parent_states;
        parent_states.reserve(parents.size());
        for (int p : parents) parent_states.push_back(states[p]);
        std::vector<double> dist =
            refit_from_examples
                ? example_conditional(schema, examples, node, parents, parent_states)
                : joint.conditional(node, parents, parent_states);
        states[node] = draw_categorical(dist, rng);
      }
      candidate.values.clear();
      for (size_t c = 0; c < states.size(); ++c) {
        candidate.values.emplace_back(schema.columns[c].categories[states[c]]);
      }
      if (!condition || condition->matches(candidate)) break;
    }
    out.push_back(std::move(candidate));
  }
  return serialize_records(schema, out);
}

namespace {

std::vector<std::string> extract_pair_blocks(const std::string& user) {
  std::vector<std::string> blocks;
  const std::string lower = to_lower(user);
  size_t pos = 0;
  while (true) {
    size_t begin = lower.find("<pair>", pos);
    if (begin == std::string::npos) break;
    size_t end = lower.find("</pair>", begin);
    if (end == std::string::npos) break;
    blocks.push_back(user.substr(begin + 6, end - begin - 6));
    pos = end + 7;
  }
  return blocks;
}

// Task guidance inside a pair block: everything that is not the graph
// introduction, the pair list, the aim line, or the score line.
std::string extract_pair_task(const std::string& block) {
  std::vector<std::string> kept;
  for (const auto& raw : split_lines(block)) {
    std::string line = trim(raw);
    if (line.empty()) continue;
    if (starts_with_icase(line, "Here is the causal graph")) continue;
    if (starts_with_icase(line, "Set your aim")) continue;
    if (starts_with_icase(line, "Aim to achieve")) continue;
    if (starts_with_icase(line, "Score:")) continue;
    if (line.front() == '[') continue;
    kept.push_back(line);
  }
  return join(kept, " ");
}

void apply_edit(Dag& graph, const EdgeEdit& edit) {
  int from = graph.node_index(edit.from);
  int to = graph.node_index(edit.to);
  if (from < 0 || to < 0) return;
  switch (edit.op) {
    case EdgeEdit::Op::add:
      if (!graph.has_edge(from, to) && !graph.would_create_cycle(from, to)) {
        graph.add_edge(from, to);
      }
      break;
    case EdgeEdit::Op::remove:
      if (graph.has_edge(from, to)) graph.remove_edge(from, to);
      break;
    case EdgeEdit::Op::reverse:
      if (graph.has_edge(from, to)) {
        Dag probe = graph;
        probe.remove_edge(from, to);
        if (!probe.would_create_cycle(to, from)) graph.reverse_edge(from, to);
      }
      break;
  }
}

std::string render_optimizer_output(const Dag& graph, const std::string& task) {
  return "<Causal structure> The optimized causal network, suggesting the influence of variable "
         "A on variable B, includes the following relationships: " +
         to_pairs_text(graph) + "</Causal structure>\n\n<Task> " + task + "</Task>";
}

}  // namespace

std::string mock_optimize(MockWorld& world, const ChatRequest& request) {
  auto blocks = extract_pair_blocks(request.user);
  if (blocks.empty()) {
    throw InvalidArgument("optimizer request carries no <pair> blocks");
  }
  const std::string& best = blocks.back();

  Dag graph = dag_from_schema(world.schema);
  try {
    graph = parse_pairs_text(best, world.schema);
  } catch (const ParseError&) {
  }
  std::string task = extract_pair_task(best);
  if (task.empty()) {
    task = "Generate synthetic samples that dutifully follow the causal relationships in the "
           "structure above.";
  }

  const int script_size = static_cast<int>(world.optimizer_script.size());
  if (world.script_cursor >= script_size) {
    return render_optimizer_output(graph, task);
  }

  for (int i = 0; i <= world.script_cursor; ++i) {
    apply_edit(graph, world.optimizer_script[i]);
  }
  const EdgeEdit& latest = world.optimizer_script[world.script_cursor];
  ++world.script_cursor;

  std::string new_task =
      "Generate synthetic samples that dutifully follow the causal relationships in the "
      "structure above.";
  if (latest.op == EdgeEdit::Op::remove) {
    new_task += " The relationship between '" + latest.from + "' and '" + latest.to +
                "' has been removed.";
  } else {
    new_task += " Make sure '" + latest.from + "' influences '" + latest.to + "'.";
  }
  return render_optimizer_output(graph, new_task);
}

std::string MockClient::complete(const ChatRequest& request) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (starts_with_icase(request.system, "You are a data generation model")) {
    return mock_generate(world_, request);
  }
  if (starts_with_icase(request.system, "Your task is to optimize prompts")) {
    return mock_optimize(world_, request);
  }
  throw InvalidArgument("mock backend cannot route this request");
}

}  // namespace tabgan
