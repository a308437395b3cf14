#include <doctest.h>

#include <array>
#include <deque>
#include <random>

#include "tabgan/dag.hpp"
#include "tabgan/errors.hpp"
#include "tabgan/table.hpp"

using namespace tabgan;

namespace {

Schema abc_schema() {
  Schema s;
  s.columns = {ColumnSpec{"A", ColumnKind::categorical, "", {"0", "1"}},
               ColumnSpec{"B", ColumnKind::categorical, "", {"0", "1"}},
               ColumnSpec{"C", ColumnKind::categorical, "", {"0", "1"}}};
  return s;
}

Dag dag_with(std::vector<std::string> nodes, std::vector<std::pair<int, int>> edges) {
  Dag g(std::move(nodes));
  for (auto [a, b] : edges) g.add_edge(a, b);
  return g;
}

// All 6 possible directed edges on 3 nodes, as bitmask positions.
constexpr std::array<std::pair<int, int>, 6> kEdges3{{{0, 1}, {1, 0}, {0, 2}, {2, 0}, {1, 2}, {2, 1}}};

bool mask_is_acyclic(unsigned mask) {
  // 3 nodes: a cycle needs either a 2-cycle or a directed triangle.
  auto has = [&](int a, int b) {
    for (size_t i = 0; i < kEdges3.size(); ++i) {
      if (kEdges3[i] == std::make_pair(a, b)) return (mask >> i & 1u) != 0;
    }
    return false;
  };
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      if (a != b && has(a, b) && has(b, a)) return false;
    }
  }
  int perms[2][3] = {{0, 1, 2}, {0, 2, 1}};
  for (auto& p : perms) {
    if (has(p[0], p[1]) && has(p[1], p[2]) && has(p[2], p[0])) return false;
  }
  return true;
}

// Minimum number of single-edge add/delete/reverse edits between edge masks,
// allowing cyclic intermediate graphs.
int bfs_edit_distance(unsigned from, unsigned to) {
  std::array<int, 64> dist;
  dist.fill(-1);
  dist[from] = 0;
  std::deque<unsigned> q{from};
  while (!q.empty()) {
    unsigned m = q.front();
    q.pop_front();
    if (m == to) return dist[m];
    auto visit = [&](unsigned next) {
      if (dist[next] < 0) {
        dist[next] = dist[m] + 1;
        q.push_back(next);
      }
    };
    for (size_t i = 0; i < kEdges3.size(); ++i) {
      unsigned bit = 1u << i;
      if (m & bit) {
        visit(m & ~bit);  // delete
        size_t rev = i ^ 1u;
        unsigned flipped = (m & ~bit) | (1u << rev);
        if (flipped != m) visit(flipped);  // reverse
      } else {
        visit(m | bit);  // add
      }
    }
  }
  return -1;
}

Dag dag_from_mask(unsigned mask) {
  Dag g(std::vector<std::string>{"A", "B", "C"});
  for (size_t i = 0; i < kEdges3.size(); ++i) {
    if (mask >> i & 1u) g.add_edge(kEdges3[i].first, kEdges3[i].second);
  }
  return g;
}

}  // namespace

TEST_CASE("dag mutations preserve acyclicity") {
  Dag g(std::vector<std::string>{"A", "B", "C"});
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  CHECK(g.has_edge(0, 1));
  CHECK_THROWS_AS(g.add_edge(2, 0), InvalidArgument);
  CHECK_THROWS_AS(g.add_edge(0, 0), InvalidArgument);
  g.reverse_edge(0, 1);
  CHECK(g.has_edge(1, 0));
  CHECK_FALSE(g.has_edge(0, 1));
  CHECK_THROWS_AS(g.remove_edge(0, 1), InvalidArgument);
  auto order = g.topological_order();
  CHECK(order.size() == 3);
  CHECK(order[0] == 1);
}

TEST_CASE("to_pairs_text renders sorted quoted pairs") {
  Dag g(std::vector<std::string>{"age", "workclass"});
  g.add_edge(0, 1);
  CHECK(to_pairs_text(g) == "[('age', 'workclass')]");

  Dag empty(std::vector<std::string>{"age", "workclass"});
  CHECK(to_pairs_text(empty) == "[]");
}

TEST_CASE("parse_pairs_text reads quoted pair lists") {
  Schema s = abc_schema();
  Dag g = parse_pairs_text("[('A','B'), ('B','C')]", s);
  CHECK(g.edges().size() == 2);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 2));
}

TEST_CASE("parse_pairs_text drops cycle-inducing pairs, first listed wins") {
  Schema s = abc_schema();
  int warnings = 0;
  Dag g = parse_pairs_text("[('A','B'), ('B','A')]", s, &warnings);
  CHECK(g.edges().size() == 1);
  CHECK(g.has_edge(0, 1));
  CHECK(warnings == 1);
}

TEST_CASE("parse_pairs_text drops unknown nodes with a warning") {
  Schema s = abc_schema();
  int warnings = 0;
  Dag g = parse_pairs_text("[('A','Z')]", s, &warnings);
  CHECK(g.edges().empty());
  CHECK(warnings == 1);
}

TEST_CASE("parse_pairs_text handles prose, double quotes, and empty lists") {
  Schema s = abc_schema();
  Dag g = parse_pairs_text("The graph includes: [(\"A\", \"C\")] as discussed.", s);
  CHECK(g.has_edge(0, 2));
  CHECK(parse_pairs_text("[]", s).edges().empty());
  CHECK_THROWS_AS(parse_pairs_text("I cannot help with that.", s), ParseError);
}

TEST_CASE("random DAGs round-trip through pair text") {
  std::vector<std::string> nodes{"n0", "n1", "n2", "n3", "n4", "n5"};
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    Dag g(nodes);
    int added = 0;
    while (added < 10) {
      int a = static_cast<int>(rng() % nodes.size());
      int b = static_cast<int>(rng() % nodes.size());
      if (a == b || g.has_edge(a, b) || g.would_create_cycle(a, b)) {
        if (g.edges().size() >= 12) break;
        ++added;
        continue;
      }
      g.add_edge(a, b);
      ++added;
    }
    Schema s;
    for (const auto& n : nodes) {
      s.columns.push_back(ColumnSpec{n, ColumnKind::categorical, "", {"0", "1"}});
    }
    CHECK(parse_pairs_text(to_pairs_text(g), s) == g);
  }
}

TEST_CASE("ged basics") {
  std::vector<std::string> nodes{"A", "B", "C"};
  Dag g1 = dag_with(nodes, {{0, 1}, {1, 2}});
  Dag g2 = dag_with(nodes, {{1, 0}, {1, 2}});
  Dag empty(nodes);
  CHECK(ged(g1, g1) == 0);
  CHECK(ged(dag_with(nodes, {{0, 1}}), empty) == 1);
  CHECK(ged(g1, g2) == 1);
  Dag other(std::vector<std::string>{"A", "B"});
  CHECK_THROWS_AS(ged(g1, other), InvalidArgument);
}

TEST_CASE("ged equals brute-force minimal edit count on all 3-node DAG pairs") {
  std::vector<unsigned> dags;
  for (unsigned m = 0; m < 64; ++m) {
    if (mask_is_acyclic(m)) dags.push_back(m);
  }
  REQUIRE(dags.size() == 25);
  for (unsigned a : dags) {
    for (unsigned b : dags) {
      CHECK(ged(dag_from_mask(a), dag_from_mask(b)) == bfs_edit_distance(a, b));
    }
  }
}

TEST_CASE("ged is a metric on sampled DAG triples") {
  std::vector<unsigned> dags;
  for (unsigned m = 0; m < 64; ++m) {
    if (mask_is_acyclic(m)) dags.push_back(m);
  }
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    Dag a = dag_from_mask(dags[rng() % dags.size()]);
    Dag b = dag_from_mask(dags[rng() % dags.size()]);
    Dag c = dag_from_mask(dags[rng() % dags.size()]);
    CHECK(ged(a, b) == ged(b, a));
    CHECK((ged(a, b) == 0) == (a == b));
    CHECK(ged(a, c) <= ged(a, b) + ged(b, c));
  }
}

namespace {

Table binary_table(const std::vector<std::vector<int>>& data) {
  Schema s;
  for (size_t c = 0; c < data[0].size(); ++c) {
    s.columns.push_back(
        ColumnSpec{"X" + std::to_string(c), ColumnKind::categorical, "", {"0", "1"}});
  }
  Table t;
  t.schema = s;
  for (const auto& row : data) {
    Record r;
    for (int v : row) r.values.emplace_back(std::string(v ? "1" : "0"));
    t.rows.push_back(std::move(r));
  }
  return t;
}

}  // namespace

TEST_CASE("bic prefers the empty graph on independent data") {
  std::mt19937_64 rng(5);
  std::vector<std::vector<int>> data;
  for (int i = 0; i < 200; ++i) {
    data.push_back({static_cast<int>(rng() % 2), static_cast<int>(rng() % 2),
                    static_cast<int>(rng() % 2)});
  }
  Table t = binary_table(data);
  Dag empty = dag_from_schema(t.schema);
  Dag saturated = dag_with(empty.nodes(), {{0, 1}, {0, 2}, {1, 2}});
  CHECK(bic_score(empty, t) > bic_score(saturated, t));
}

TEST_CASE("bic rewards a deterministic dependency") {
  std::mt19937_64 rng(6);
  std::vector<std::vector<int>> data;
  for (int i = 0; i < 100; ++i) {
    int a = static_cast<int>(rng() % 2);
    data.push_back({a, a, static_cast<int>(rng() % 2)});
  }
  Table t = binary_table(data);
  Dag empty = dag_from_schema(t.schema);
  Dag ab = dag_with(empty.nodes(), {{0, 1}});
  CHECK(bic_score(ab, t) > bic_score(empty, t));
}

TEST_CASE("bic decomposes over disconnected families") {
  std::mt19937_64 rng(9);
  std::vector<std::vector<int>> data;
  for (int i = 0; i < 150; ++i) {
    int a = static_cast<int>(rng() % 2);
    int c = static_cast<int>(rng() % 2);
    int b = rng() % 10 == 0 ? 1 - a : a;
    int d = rng() % 10 == 0 ? 1 - c : c;
    data.push_back({a, b, c, d});
  }
  Table t = binary_table(data);
  Dag empty = dag_from_schema(t.schema);
  Dag ab = dag_with(empty.nodes(), {{0, 1}});
  Dag cd = dag_with(empty.nodes(), {{2, 3}});
  Dag both = dag_with(empty.nodes(), {{0, 1}, {2, 3}});
  double e = bic_score(empty, t);
  CHECK(bic_score(both, t) == doctest::Approx(bic_score(ab, t) + bic_score(cd, t) - e).epsilon(1e-12));
}

TEST_CASE("bic discretizes numeric columns") {
  Schema s;
  s.columns = {ColumnSpec{"x", ColumnKind::numeric, "", {}},
               ColumnSpec{"y", ColumnKind::numeric, "", {}}};
  Table t;
  t.schema = s;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 400; ++i) {
    double x = u(rng);
    t.rows.push_back(Record{{x, x + 0.01 * u(rng)}});
  }
  Dag empty = dag_from_schema(s);
  Dag xy = dag_with(empty.nodes(), {{0, 1}});
  CHECK(bic_score(xy, t) > bic_score(empty, t));
}

TEST_CASE("hill_climb recovers a strong pairwise dependency") {
  std::mt19937_64 rng(17);
  std::vector<std::vector<int>> data;
  for (int i = 0; i < 2000; ++i) {
    int a = static_cast<int>(rng() % 2);
    int b = (rng() % 100) < 95 ? a : 1 - a;
    data.push_back({a, b});
  }
  Table t = binary_table(data);
  Dag learned = hill_climb(t);
  Dag truth = dag_with(learned.nodes(), {{0, 1}});
  CHECK(ged(learned, truth) <= 1);
}

TEST_CASE("hill_climb on a single column returns no edges") {
  Table t = binary_table({{0}, {1}, {0}});
  CHECK(hill_climb(t).edges().empty());
}

TEST_CASE("hill_climb leaves independent data unconnected") {
  std::mt19937_64 rng(23);
  std::vector<std::vector<int>> data;
  for (int i = 0; i < 2000; ++i) {
    data.push_back({static_cast<int>(rng() % 2), static_cast<int>(rng() % 2),
                    static_cast<int>(rng() % 2)});
  }
  Table t = binary_table(data);
  CHECK(hill_climb(t).edges().empty());
}

TEST_CASE("hill_climb respects max_parents") {
  std::mt19937_64 rng(29);
  std::vector<std::vector<int>> data;
  for (int i = 0; i < 500; ++i) {
    int a = static_cast<int>(rng() % 2);
    int b = static_cast<int>(rng() % 2);
    int c = static_cast<int>(rng() % 2);
    int d = (a ^ b ^ c) ? 1 : 0;
    data.push_back({a, b, c, d});
  }
  Table t = binary_table(data);
  Dag g = hill_climb(t, 2, 200, 0);
  for (size_t node = 0; node < g.nodes().size(); ++node) {
    CHECK(g.parents(static_cast<int>(node)).size() <= 2);
  }
}

TEST_CASE("to_dot renders nodes and edges") {
  Dag g = dag_with({"A", "B"}, {{0, 1}});
  std::string dot = to_dot(g);
  CHECK(dot.find("\"A\" -> \"B\"") != std::string::npos);
}
