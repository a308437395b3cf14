#include <doctest.h>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <json.hpp>
#include <string>
#include <vector>

#include "tabgan/errors.hpp"
#include "tabgan/generator.hpp"
#include "tabgan/mock_llm.hpp"
#include "tabgan/text_util.hpp"

using namespace tabgan;

namespace {

const char* kWorldPath = TESTS_DIR "/fixtures/chain_world.json";

int category_of(const ColumnSpec& col, const Record& rec, int column) {
  const auto& v = std::get<std::string>(rec.values[column]);
  auto it = std::find(col.categories.begin(), col.categories.end(), v);
  REQUIRE(it != col.categories.end());
  return static_cast<int>(it - col.categories.begin());
}

// Flat cell index with the last column varying fastest, mirroring the joint
// enumeration order.
int cell_of(const Schema& schema, const std::vector<int>& radices, const Record& rec) {
  int index = 0;
  for (size_t c = 0; c < schema.columns.size(); ++c) {
    index = index * radices[c] + category_of(schema.columns[c], rec, static_cast<int>(c));
  }
  return index;
}

double chi_square_p_value(const std::vector<double>& expected, const std::vector<int>& observed) {
  REQUIRE(expected.size() == observed.size());
  double stat = 0.0;
  int cells = 0;
  for (size_t i = 0; i < expected.size(); ++i) {
    if (expected[i] <= 0.0) {
      CHECK(observed[i] == 0);
      continue;
    }
    double d = observed[i] - expected[i];
    stat += d * d / expected[i];
    ++cells;
  }
  REQUIRE(cells > 1);
  boost::math::chi_squared dist(cells - 1);
  return 1.0 - boost::math::cdf(dist, stat);
}

std::vector<double> expected_counts(const JointDistribution& joint, const Schema& schema, int n) {
  const auto& radices = joint.radices();
  size_t total = 1;
  for (int r : radices) total *= r;
  std::vector<double> out(total, 0.0);
  std::vector<int> states(schema.columns.size(), 0);
  for (size_t cell = 0; cell < total; ++cell) {
    out[cell] = joint.probability(states) * n;
    for (int c = static_cast<int>(states.size()) - 1; c >= 0; --c) {
      if (++states[c] < radices[c]) break;
      states[c] = 0;
    }
  }
  return out;
}

std::vector<int> observed_counts(const Schema& schema, const std::vector<int>& radices,
                                 const std::vector<Record>& rows) {
  size_t total = 1;
  for (int r : radices) total *= r;
  std::vector<int> out(total, 0);
  for (const auto& rec : rows) out[cell_of(schema, radices, rec)] += 1;
  return out;
}

ChatRequest generation_request(const MockWorld& world, const Dag& graph, int n_samples,
                               const std::vector<Record>& examples,
                               const std::optional<std::string>& condition = std::nullopt) {
  DataGenProcess theta = make_initial_theta(world.schema, graph);
  return render_generator_prompt(theta, world.schema, examples, n_samples, condition,
                                 GenConfig{});
}

ChatRequest optimizer_request(const std::vector<std::pair<std::string, std::string>>& pairs) {
  ChatRequest request;
  request.system =
      "Your task is to optimize prompts for generating high-quality synthetic data. "
      "Aim to lower the scores associated with each casual structure and prompt.";
  std::string user;
  for (const auto& [pairs_line, task] : pairs) {
    user += "<pair>\nHere is the causal graph of the data, where a tuple (A, B) indicates A "
            "causes B:\n" +
            pairs_line + "\n" + task + "\nSet your aim to achieve a score below 60.00%\n" +
            "Score: 80.00%\n</pair>\n";
  }
  user += "Your updated prompt should explicitly include any modifications to the causal graph "
          "and guidance.\n\nThe updated prompt:";
  request.user = user;
  request.temperature = 1.0;
  return request;
}

}  // namespace

TEST_CASE("the world fixture loads, validates, and reports its pieces") {
  MockWorld world = MockWorld::load(kWorldPath);
  CHECK(world.seed == 7);
  CHECK(world.schema.columns.size() == 3);
  CHECK(world.ground_truth.edges().size() == 2);
  CHECK(world.ground_truth.has_edge(0, 1));
  CHECK(world.ground_truth.has_edge(1, 2));
  CHECK(world.optimizer_script.size() == 4);
  CHECK(world.script_cursor == 0);
}

TEST_CASE("broken worlds are rejected with specific errors") {
  const std::string text = read_file(kWorldPath);

  SUBCASE("a CPT row that does not sum to one") {
    auto j = nlohmann::json::parse(text);
    j["cpts"][0]["rows"][0]["p"] = {0.5, 0.4};
    CHECK_THROWS_AS(MockWorld::from_json(j.dump()), InvalidArgument);
  }
  SUBCASE("a missing parent configuration") {
    auto j = nlohmann::json::parse(text);
    j["cpts"][1]["rows"].erase(1);
    CHECK_THROWS_AS(MockWorld::from_json(j.dump()), InvalidArgument);
  }
  SUBCASE("a numeric column") {
    auto j = nlohmann::json::parse(text);
    j["schema"]["columns"][0] = {{"name", "a"}, {"kind", "numeric"}};
    CHECK_THROWS_AS(MockWorld::from_json(j.dump()), SchemaError);
  }
  SUBCASE("a script edit naming an unknown column") {
    auto j = nlohmann::json::parse(text);
    j["optimizer_script"][0]["from"] = "zz";
    CHECK_THROWS_AS(MockWorld::from_json(j.dump()), InvalidArgument);
  }
  SUBCASE("CPT parents disagreeing with the graph") {
    auto j = nlohmann::json::parse(text);
    j["cpts"][2]["parents"] = {"a"};
    CHECK_THROWS_AS(MockWorld::from_json(j.dump()), InvalidArgument);
  }
}

TEST_CASE("the joint distribution matches hand-computed cells") {
  MockWorld world = MockWorld::load(kWorldPath);
  JointDistribution joint(world);

  CHECK(joint.probability({1, 1, 1}) == doctest::Approx(0.7 * 0.85 * 0.75).epsilon(1e-12));
  CHECK(joint.probability({0, 0, 0}) == doctest::Approx(0.3 * 0.8 * 0.9).epsilon(1e-12));

  double total = 0.0;
  std::vector<int> states(3, 0);
  for (int cell = 0; cell < 8; ++cell) {
    total += joint.probability(states);
    for (int c = 2; c >= 0; --c) {
      if (++states[c] < 2) break;
      states[c] = 0;
    }
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  auto ma = joint.marginal(0);
  CHECK(ma[0] == doctest::Approx(0.3));
  CHECK(ma[1] == doctest::Approx(0.7));
  auto c_given_b = joint.conditional(2, {1}, {1});
  CHECK(c_given_b[0] == doctest::Approx(0.25));
  CHECK(c_given_b[1] == doctest::Approx(0.75));
  auto b_given_a = joint.conditional(1, {0}, {0});
  CHECK(b_given_a[0] == doctest::Approx(0.8));
  CHECK(b_given_a[1] == doctest::Approx(0.2));
}

TEST_CASE("zero-mass parent configurations fall back to the marginal") {
  MockWorld world;
  world.schema.context = "degenerate";
  world.schema.columns = {{"a", ColumnKind::categorical, "", {"no", "yes"}},
                          {"b", ColumnKind::categorical, "", {"no", "yes"}}};
  world.schema.target = "b";
  world.ground_truth = dag_from_schema(world.schema);
  world.ground_truth.add_edge(0, 1);
  world.cpts = {
      {"a", {}, {{{}, {1.0, 0.0}}}},
      {"b", {"a"}, {{{"no"}, {0.9, 0.1}}, {{"yes"}, {0.2, 0.8}}}},
  };
  world.validate();

  JointDistribution joint(world);
  auto fallback = joint.conditional(1, {0}, {1});  // P(b | a=yes) has zero mass
  auto marginal = joint.marginal(1);
  CHECK(fallback[0] == doctest::Approx(marginal[0]));
  CHECK(fallback[1] == doctest::Approx(marginal[1]));
}

TEST_CASE("ancestral sampling is deterministic per seed and matches the joint") {
  MockWorld world = MockWorld::load(kWorldPath);

  Table a = sample_world(world, 50, 3);
  Table b = sample_world(world, 50, 3);
  REQUIRE(a.rows.size() == 50);
  CHECK(a.rows == b.rows);
  Table c = sample_world(world, 50, 4);
  CHECK(a.rows != c.rows);

  JointDistribution joint(world);
  Table big = sample_world(world, 4000, 11);
  auto expected = expected_counts(joint, world.schema, 4000);
  auto observed = observed_counts(world.schema, joint.radices(), big.rows);
  CHECK(chi_square_p_value(expected, observed) > 0.01);
}

TEST_CASE("mock generation is deterministic and yields valid records") {
  MockWorld world = MockWorld::load(kWorldPath);
  auto examples = sample_world(world, 2, 21).rows;
  auto request = generation_request(world, world.ground_truth, 10, examples);

  std::string text = mock_generate(world, request);
  CHECK(text == mock_generate(world, request));

  auto parsed = parse_records(text, world.schema);
  CHECK(parsed.records.size() == 10);
  CHECK(parsed.rejected == 0);

  auto other_request = generation_request(world, world.ground_truth, 10,
                                          sample_world(world, 2, 22).rows);
  CHECK(mock_generate(world, other_request) != text);
}

TEST_CASE("generation fidelity follows the causal graph in the prompt") {
  MockWorld world = MockWorld::load(kWorldPath);
  JointDistribution joint(world);
  auto examples = sample_world(world, 2, 31).rows;
  const int n = 600;

  SUBCASE("the ground-truth graph reproduces the joint") {
    auto request = generation_request(world, world.ground_truth, n, examples);
    auto rows = parse_records(mock_generate(world, request), world.schema).records;
    REQUIRE(static_cast<int>(rows.size()) == n);
    auto expected = expected_counts(joint, world.schema, n);
    auto observed = observed_counts(world.schema, joint.radices(), rows);
    CHECK(chi_square_p_value(expected, observed) > 0.01);
  }

  SUBCASE("an empty graph yields independent marginals instead") {
    auto request = generation_request(world, dag_from_schema(world.schema), n, examples);
    auto rows = parse_records(mock_generate(world, request), world.schema).records;
    REQUIRE(static_cast<int>(rows.size()) == n);

    std::vector<double> independent(8, 0.0);
    auto ma = joint.marginal(0);
    auto mb = joint.marginal(1);
    auto mc = joint.marginal(2);
    for (int ia = 0; ia < 2; ++ia)
      for (int ib = 0; ib < 2; ++ib)
        for (int ic = 0; ic < 2; ++ic)
          independent[ia * 4 + ib * 2 + ic] = ma[ia] * mb[ib] * mc[ic] * n;

    auto observed = observed_counts(world.schema, joint.radices(), rows);
    CHECK(chi_square_p_value(independent, observed) > 0.01);
    CHECK(chi_square_p_value(expected_counts(joint, world.schema, n), observed) < 1e-4);
  }
}

TEST_CASE("an unparseable causal block degrades to independent sampling") {
  MockWorld world = MockWorld::load(kWorldPath);
  auto examples = sample_world(world, 2, 41).rows;
  auto request = generation_request(world, world.ground_truth, 50, examples);
  auto pos = request.system.find("<causal structure>");
  REQUIRE(pos != std::string::npos);
  auto end = request.system.find("</causal structure>");
  request.system =
      request.system.substr(0, pos) +
      "<causal structure> pairs: (a to b) and (b to c) " + request.system.substr(end);

  auto rows = parse_records(mock_generate(world, request), world.schema).records;
  CHECK(rows.size() == 50);
}

TEST_CASE("twenty or more prompt examples re-fit the sampling distribution") {
  MockWorld world = MockWorld::load(kWorldPath);
  Record all_yes{{std::string("yes"), std::string("yes"), std::string("yes")}};
  std::vector<Record> examples(25, all_yes);

  auto request = generation_request(world, dag_from_schema(world.schema), 200, examples);
  auto rows = parse_records(mock_generate(world, request), world.schema).records;
  REQUIRE(rows.size() == 200);
  int yes = 0;
  for (const auto& rec : rows) {
    if (std::get<std::string>(rec.values[0]) == "yes") ++yes;
  }
  CHECK(yes >= 180);  // Laplace-smoothed re-fit puts ~0.96 on "yes"
}

TEST_CASE("conditional generation requests are honored") {
  MockWorld world = MockWorld::load(kWorldPath);
  auto examples = sample_world(world, 2, 51).rows;
  auto request = generation_request(world, world.ground_truth, 100, examples,
                                    std::string("c = yes"));
  auto rows = parse_records(mock_generate(world, request), world.schema).records;
  REQUIRE(rows.size() == 100);
  for (const auto& rec : rows) CHECK(std::get<std::string>(rec.values[2]) == "yes");
}

TEST_CASE("the scripted optimizer advances one edit per call and then echoes") {
  MockWorld world = MockWorld::load(kWorldPath);
  const std::string task = "Keep it faithful.";

  auto reply1 = mock_optimize(world, optimizer_request({{"[]", task}}));
  auto block1 = extract_tag_block(reply1, "causal structure");
  REQUIRE(block1.has_value());
  CHECK(block1->find("[('a', 'b')]") != std::string::npos);
  auto task1 = extract_tag_block(reply1, "task");
  REQUIRE(task1.has_value());
  CHECK(task1->find("'a'") != std::string::npos);
  CHECK(task1->find("'b'") != std::string::npos);
  CHECK(world.script_cursor == 1);

  auto reply2 = mock_optimize(world, optimizer_request({{"[]", task}}));
  CHECK(extract_tag_block(reply2, "causal structure")
            ->find("[('a', 'b'), ('b', 'c')]") != std::string::npos);

  auto reply3 = mock_optimize(world, optimizer_request({{"[('a', 'b'), ('b', 'c')]", task}}));
  CHECK(extract_tag_block(reply3, "causal structure")
            ->find("[('b', 'a'), ('b', 'c')]") != std::string::npos);

  auto reply4 = mock_optimize(world, optimizer_request({{"[]", task}}));
  CHECK(extract_tag_block(reply4, "causal structure")->find("[('b', 'a')]") !=
        std::string::npos);
  CHECK(world.script_cursor == 4);

  auto reply5 = mock_optimize(world, optimizer_request({{"[('a', 'b')]", task}}));
  CHECK(extract_tag_block(reply5, "causal structure")->find("[('a', 'b')]") !=
        std::string::npos);
  auto task5 = extract_tag_block(reply5, "task");
  REQUIRE(task5.has_value());
  CHECK(trim(*task5) == task);
  CHECK(world.script_cursor == 4);
}

TEST_CASE("the optimizer works from the last listed pair block") {
  MockWorld world = MockWorld::load(kWorldPath);
  world.optimizer_script.clear();  // echo mode
  auto reply = mock_optimize(
      world, optimizer_request({{"[('b', 'c')]", "First."}, {"[('a', 'c')]", "Second."}}));
  CHECK(extract_tag_block(reply, "causal structure")->find("[('a', 'c')]") !=
        std::string::npos);
  CHECK(trim(*extract_tag_block(reply, "task")) == "Second.");
}

TEST_CASE("a request without pair blocks is rejected") {
  MockWorld world = MockWorld::load(kWorldPath);
  ChatRequest request;
  request.system = "Your task is to optimize prompts for generating high-quality synthetic data.";
  request.user = "no blocks here";
  CHECK_THROWS_AS(mock_optimize(world, request), InvalidArgument);
}

TEST_CASE("the mock client routes by system preamble and keeps optimizer state") {
  MockClient client(MockWorld::load(kWorldPath));
  auto examples = sample_world(client.world(), 2, 61).rows;

  auto generation = generation_request(client.world(), client.world().ground_truth, 4, examples);
  auto rows = parse_records(client.complete(generation), client.world().schema).records;
  CHECK(rows.size() == 4);

  client.complete(optimizer_request({{"[]", "Task."}}));
  CHECK(client.world().script_cursor == 1);

  ChatRequest other;
  other.system = "You summarize poetry.";
  other.user = "hi";
  CHECK_THROWS_AS(client.complete(other), InvalidArgument);
}
