#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tabgan/dag.hpp"
#include "tabgan/errors.hpp"
#include "tabgan/evaluation.hpp"
#include "tabgan/generator.hpp"
#include "tabgan/llm_client.hpp"
#include "tabgan/mock_llm.hpp"
#include "tabgan/table.hpp"
#include "tabgan/text_util.hpp"
#include "tabgan/trainer.hpp"

using namespace tabgan;

namespace {

struct Options {
  std::string data;
  std::string schema;
  std::string out;
  std::string backend = "mock";
  std::string world;
  std::string base_url;
  std::string model;
  std::string theta;
  std::string condition;
  std::string reference_dag;
  std::string metric;
  std::string synthetic;
  std::string train;
  std::string holdout;
  int epochs = 10;
  int batch_size = 50;
  int n_examples = 5;
  int k = 3;
  int n = 10;
  int mle_seeds = 3;
  uint64_t seed = 0;
};

std::optional<Schema> maybe_schema(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_schema(path);
}

Table load_data(const std::string& data_path, const std::string& schema_path) {
  if (data_path.empty()) throw ConfigError("--data is required");
  return load_csv(data_path, maybe_schema(schema_path));
}

Dag load_reference_dag(const std::string& path, const Schema& schema) {
  int warnings = 0;
  Dag dag = parse_pairs_text(read_file(path), schema, &warnings);
  if (warnings > 0)
    throw ConfigError("reference dag '" + path + "' names columns outside the schema");
  return dag;
}

std::unique_ptr<ChatClient> make_client(const Options& opt, const std::string& transcript_path) {
  if (opt.backend == "mock") {
    if (opt.world.empty())
      throw ConfigError("the mock backend needs --world <world.json>");
    return std::make_unique<MockClient>(MockWorld::load(opt.world));
  }
  ProviderConfig config;
  if (!opt.base_url.empty()) config.base_url = opt.base_url;
  if (!opt.model.empty()) config.model = opt.model;
  config.transcript_path = transcript_path;
  auto client = std::make_unique<LiveClient>(std::move(config));
  // Surface unreachable endpoints and bad keys before a run burns calls on
  // them; mid-run flakiness stays with the retry/skip machinery.
  ChatRequest ping;
  ping.system = "You are a connectivity check.";
  ping.user = "Reply with the single word OK.";
  ping.temperature = 0.0;
  ping.max_tokens = 8;
  client->complete(ping);
  return client;
}

void write_resolved_config(const Options& opt, const std::string& subcommand,
                           const std::string& path) {
  nlohmann::json j;
  j["subcommand"] = subcommand;
  j["data"] = opt.data;
  j["schema"] = opt.schema;
  j["out"] = opt.out;
  j["backend"] = opt.backend;
  j["world"] = opt.world;
  j["base_url"] = opt.base_url;
  j["model"] = opt.model;
  j["api_key_env"] = "MALLMGAN_API_KEY";
  j["epochs"] = opt.epochs;
  j["batch_size"] = opt.batch_size;
  j["n_examples"] = opt.n_examples;
  j["k"] = opt.k;
  j["seed"] = opt.seed;
  j["reference_dag"] = opt.reference_dag;
  write_file(path, j.dump(2) + "\n");
}

int cmd_init_structure(const Options& opt) {
  Table data = load_data(opt.data, opt.schema);
  Dag structure = hill_climb(data, 3, 200, opt.seed);
  std::string pairs = to_pairs_text(structure);
  if (opt.out.empty()) throw ConfigError("--out is required");
  write_file(opt.out, pairs + "\n");
  std::cout << pairs << "\n";
  if (!opt.reference_dag.empty()) {
    Dag reference = load_reference_dag(opt.reference_dag, data.schema);
    std::cout << "ged_to_reference: " << ged(structure, reference) << "\n";
  }
  std::cout << "wrote " << opt.out << "\n";
  return 0;
}

int cmd_train(const Options& opt) {
  Table data = load_data(opt.data, opt.schema);
  if (opt.out.empty()) throw ConfigError("--out is required");
  std::filesystem::create_directories(opt.out);

  RunConfig config;
  config.max_epochs = opt.epochs;
  config.batch_size = opt.batch_size;
  config.gen.batch_size = opt.batch_size;
  config.gen.n_examples_per_call = opt.n_examples;
  config.k = opt.k;
  config.seed = opt.seed;
  config.run_log_path = opt.out + "/run_log.jsonl";
  if (!opt.reference_dag.empty())
    config.reference_dag = load_reference_dag(opt.reference_dag, data.schema);

  write_resolved_config(opt, "train", opt.out + "/config.json");
  auto client = make_client(opt, opt.out + "/transcript.jsonl");
  RunResult result = run(data, config, *client);

  write_file(opt.out + "/theta.txt", render_theta_text(result.final_theta) + "\n");
  write_csv(result.synthetic, opt.out + "/synthetic.csv");

  std::cout << "epochs_ran: " << result.epochs_ran << "\n";
  std::cout << "iterations: " << result.history.size() << "\n";
  if (!result.history.empty())
    std::cout << "final_score: " << format_double(result.history.back().score) << "\n";
  if (config.reference_dag)
    std::cout << "final_ged_to_reference: "
              << ged(result.final_theta.causal, *config.reference_dag) << "\n";
  std::cout << "wrote " << opt.out << "/config.json\n";
  std::cout << "wrote " << config.run_log_path << "\n";
  std::cout << "wrote " << opt.out << "/theta.txt\n";
  std::cout << "wrote " << opt.out << "/synthetic.csv\n";
  return 0;
}

int cmd_generate(const Options& opt) {
  Table data = load_data(opt.data, opt.schema);
  if (opt.theta.empty()) throw ConfigError("--theta is required");
  if (opt.out.empty()) throw ConfigError("--out is required");
  DataGenProcess theta = parse_theta_text(read_file(opt.theta), data.schema);

  GenConfig config;
  config.batch_size = opt.batch_size;
  config.n_examples_per_call = opt.n_examples;
  std::optional<std::string> condition;
  if (!opt.condition.empty()) condition = opt.condition;

  auto client = make_client(opt, "");
  Table synthetic = sample(theta, data, opt.n, condition, *client, config);
  write_csv(synthetic, opt.out);
  std::cout << "wrote " << opt.out << " (" << synthetic.rows.size() << " rows)\n";
  return 0;
}

int cmd_evaluate(const Options& opt) {
  if (opt.synthetic.empty()) throw ConfigError("--synthetic is required");
  if (opt.holdout.empty()) throw ConfigError("--holdout is required");
  if (opt.out.empty()) throw ConfigError("--out is required");
  std::filesystem::create_directories(opt.out);

  if (opt.metric == "mle") {
    std::string anchor = opt.train.empty() ? opt.holdout : opt.train;
    Table shaped = load_csv(anchor, maybe_schema(opt.schema));
    Table synthetic = load_csv(opt.synthetic, shaped.schema);
    Table holdout = load_csv(opt.holdout, shaped.schema);
    if (shaped.schema.target.empty())
      throw ConfigError("mle needs a schema file that names the target column");
    MleTask task = shaped.schema.column(shaped.schema.target).kind == ColumnKind::categorical
                       ? MleTask::classification
                       : MleTask::regression;
    std::vector<uint64_t> seeds;
    for (int i = 0; i < opt.mle_seeds; ++i) seeds.push_back(opt.seed + static_cast<uint64_t>(i));
    MleReport report = mle(synthetic, holdout, task, seeds);
    write_file(opt.out + "/mle.json", mle_report_to_json(report) + "\n");
    write_file(opt.out + "/mle.csv", mle_report_to_csv(report));
    std::cout << "task: "
              << (task == MleTask::classification ? "classification" : "regression") << "\n";
    std::cout << "mean_of_best: " << format_double(report.mean_of_best) << "\n";
    std::cout << "best: " << format_double(report.best) << "\n";
    std::cout << "wrote " << opt.out << "/mle.json\n";
    std::cout << "wrote " << opt.out << "/mle.csv\n";
    return 0;
  }

  if (opt.train.empty()) throw ConfigError("dcr needs --train");
  Table train = load_csv(opt.train, maybe_schema(opt.schema));
  Table synthetic = load_csv(opt.synthetic, train.schema);
  Table holdout = load_csv(opt.holdout, train.schema);
  FeatureEncoder encoder = FeatureEncoder::fit(train);
  DcrReport report = dcr_report(synthetic, train, holdout, encoder);
  write_file(opt.out + "/dcr.json", dcr_report_to_json(report) + "\n");
  write_file(opt.out + "/dcr.csv", dcr_report_to_csv(report));
  auto line = [](const DcrQuantiles& q) {
    return format_double(q.q25) + ", " + format_double(q.q50) + ", " + format_double(q.q75);
  };
  std::cout << "train_quantiles: " << line(report.train_quantiles) << "\n";
  std::cout << "holdout_quantiles: " << line(report.holdout_quantiles) << "\n";
  std::cout << "wrote " << opt.out << "/dcr.json\n";
  std::cout << "wrote " << opt.out << "/dcr.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"synthetic tabular data through an adversarial prompting loop"};
  app.set_config("--config", "", "sectioned key-value config file; flags win");
  app.require_subcommand(1);

  auto add_provider_flags = [&](CLI::App* sub) {
    sub->add_option("--backend", opt.backend, "chat backend: mock or live")
        ->check(CLI::IsMember({"mock", "live"}));
    sub->add_option("--world", opt.world, "world spec for the mock backend");
    sub->add_option("--base-url", opt.base_url, "chat-completions endpoint base URL");
    sub->add_option("--model", opt.model, "model name for the live backend");
  };

  CLI::App* init = app.add_subcommand("init-structure",
                                      "search a causal structure for a dataset");
  init->configurable();
  init->add_option("--data", opt.data, "training CSV")->required();
  init->add_option("--schema", opt.schema, "schema JSON sidecar");
  init->add_option("--out", opt.out, "output pair-list file")->required();
  init->add_option("--reference-dag", opt.reference_dag, "pair-list file to diff against");
  init->add_option("--seed", opt.seed, "random seed");

  CLI::App* train = app.add_subcommand("train", "run the adversarial loop over a dataset");
  train->configurable();
  train->add_option("--data", opt.data, "training CSV")->required();
  train->add_option("--schema", opt.schema, "schema JSON sidecar");
  train->add_option("--out", opt.out, "run directory")->required();
  add_provider_flags(train);
  train->add_option("--epochs", opt.epochs, "passes over the training data");
  train->add_option("--batch-size", opt.batch_size, "rows per batch");
  train->add_option("--n-examples", opt.n_examples, "few-shot examples per chat call");
  train->add_option("--k", opt.k, "candidate processes kept between iterations");
  train->add_option("--seed", opt.seed, "random seed");
  train->add_option("--reference-dag", opt.reference_dag,
                    "pair-list file enabling edit-distance tracking");

  CLI::App* generate = app.add_subcommand("generate",
                                          "sample synthetic rows from a trained process");
  generate->configurable();
  generate->add_option("--theta", opt.theta, "trained process text file")->required();
  generate->add_option("--data", opt.data, "real CSV supplying few-shot examples")->required();
  generate->add_option("--schema", opt.schema, "schema JSON sidecar");
  generate->add_option("--out", opt.out, "output CSV path")->required();
  generate->add_option("--n", opt.n, "rows to generate");
  generate->add_option("--condition", opt.condition, "column/value constraint, e.g. \"age > 65\"");
  generate->add_option("--batch-size", opt.batch_size, "rows requested per chat call");
  generate->add_option("--n-examples", opt.n_examples, "few-shot examples per chat call");
  add_provider_flags(generate);

  CLI::App* evaluate = app.add_subcommand("evaluate", "score synthetic data against real data");
  evaluate->configurable();
  evaluate->add_option("--synthetic", opt.synthetic, "synthetic CSV")->required();
  evaluate->add_option("--train", opt.train, "real training CSV");
  evaluate->add_option("--holdout", opt.holdout, "held-out real CSV")->required();
  evaluate->add_option("--schema", opt.schema, "schema JSON sidecar");
  evaluate->add_option("--metric", opt.metric, "mle or dcr")
      ->required()
      ->check(CLI::IsMember({"mle", "dcr"}));
  evaluate->add_option("--out", opt.out, "report directory")->required();
  evaluate->add_option("--seed", opt.seed, "base seed for the learner resamples");
  evaluate->add_option("--mle-seeds", opt.mle_seeds, "number of seeds to average over");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (init->parsed()) return cmd_init_structure(opt);
    if (train->parsed()) return cmd_train(opt);
    if (generate->parsed()) return cmd_generate(opt);
    return cmd_evaluate(opt);
  } catch (const ProviderError& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const CsvError& e) {
    std::cerr << "csv error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
