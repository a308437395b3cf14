#include "tabgan/generator.hpp"

#include <algorithm>
#include <sstream>

#include "tabgan/errors.hpp"
#include "tabgan/text_util.hpp"

namespace tabgan {

const std::string kDefaultTaskText =
    "The ultimate goal is to produce accurate and convincing synthetic data that dutifully "
    "represents these causal relationships given the user provided samples.";

std::string render_schema_text(const Schema& schema) {
  std::vector<std::string> parts;
  parts.reserve(schema.columns.size());
  for (const auto& col : schema.columns) {
    parts.push_back(col.name +
                    (col.kind == ColumnKind::numeric ? " (numerical)" : " (categorical)"));
  }
  return join(parts, ", ");
}

std::string render_categorical_text(const Schema& schema) {
  std::vector<std::string> parts;
  for (const auto& col : schema.columns) {
    if (col.kind != ColumnKind::categorical) continue;
    std::vector<std::string> quoted;
    quoted.reserve(col.categories.size());
    for (const auto& cat : col.categories) quoted.push_back("'" + cat + "'");
    parts.push_back(col.name + ": {" + join(quoted, ", ") + "}");
  }
  return join(parts, ", ");
}

DataGenProcess make_initial_theta(const Schema& schema, Dag structure) {
  DataGenProcess theta;
  theta.context = schema.context;
  theta.schema_text = render_schema_text(schema);
  theta.causal = std::move(structure);
  theta.task = kDefaultTaskText;
  theta.iteration = 0;
  return theta;
}

std::string render_theta_text(const DataGenProcess& theta) {
  return "<context>" + theta.context + "</context>\n<schema>" + theta.schema_text +
         "</schema>\n<causal structure>" + to_pairs_text(theta.causal) +
         "</causal structure>\n<task>" + theta.task + "</task>";
}

DataGenProcess parse_theta_text(const std::string& text, const Schema& schema) {
  DataGenProcess theta;
  auto context = extract_tag_block(text, "context");
  auto schema_text = extract_tag_block(text, "schema");
  auto causal = extract_tag_block(text, "causal structure");
  auto task = extract_tag_block(text, "task");
  if (!context || !schema_text || !causal || !task) {
    throw ParseError("process text is missing one of its tagged blocks");
  }
  theta.context = *context;
  theta.schema_text = *schema_text;
  theta.causal = parse_pairs_text(*causal, schema);
  theta.task = *task;
  return theta;
}

ChatRequest render_generator_prompt(const DataGenProcess& theta, const Schema& schema,
                                    const std::vector<Record>& examples, int n_samples,
                                    const std::optional<std::string>& condition,
                                    const GenConfig& config) {
  std::ostringstream system;
  system << "You are a data generation model. Your task is to understand the instruction below "
            "and generate tabular data.\n\n";
  system << "<context>" << theta.context << "</context>\n\n";
  system << "<schema> " << theta.schema_text << " </schema>\n\n";
  system << "<categorical variables> " << render_categorical_text(schema)
         << " </categorical variables>\n\n";
  system << "<causal structure> Consider this optimized causal graph of the data, where a pair "
            "(A, B) is used to represent a scenario where A affects B: "
         << to_pairs_text(theta.causal) << " </causal structure>\n\n";
  system << "<task> " << theta.task;
  if (config.target_score_line && !config.target_score_line->empty()) {
    system << ' ' << *config.target_score_line;
  }
  system << " </task>";

  std::ostringstream user;
  user << "<example> Here are examples from real data: \n"
       << serialize_records(schema, examples) << "\n</example>\n\n";
  user << "<instruction>\n";
  if (condition) {
    user << "Generate " << n_samples << " synthetic samples with " << *condition
         << ". Response should be formatted strictly as a list in JSON format, suitable for "
            "direct use in data processing scripts such as conversion to a DataFrame in Python. "
            "No additional text or numbers should precede the JSON data.";
  } else {
    user << "Generate " << n_samples
         << " synthetic samples mimic the provided samples. DO NOT COPY the samples and try to "
            "make the generated samples diverse. The response should be formatted strictly as a "
            "list in JSON format, suitable for direct use in data processing scripts such as "
            "conversion to a DataFrame in Python. No additional text or numbers should precede "
            "the JSON data.";
  }
  user << "\n</instruction>";

  ChatRequest request;
  request.system = system.str();
  request.user = user.str();
  request.temperature = config.temperature;
  request.max_tokens = config.max_tokens;
  return request;
}

std::vector<std::vector<Record>> batches_in_batch(const std::vector<Record>& batch, int n) {
  if (n < 1) throw InvalidArgument("chunk size must be at least 1");
  std::vector<std::vector<Record>> chunks;
  for (size_t begin = 0; begin < batch.size(); begin += n) {
    size_t end = std::min(batch.size(), begin + n);
    chunks.emplace_back(batch.begin() + begin, batch.begin() + end);
  }
  return chunks;
}

bool CompiledCondition::matches(const Record& record) const {
  if (kind_ == ColumnKind::categorical) {
    const std::string& v = std::get<std::string>(record.values[column_]);
    return op_ == "=" ? v == category_value_ : v != category_value_;
  }
  double v = std::get<double>(record.values[column_]);
  if (op_ == "=") return v == numeric_value_;
  if (op_ == "!=") return v != numeric_value_;
  if (op_ == "<") return v < numeric_value_;
  if (op_ == "<=") return v <= numeric_value_;
  if (op_ == ">") return v > numeric_value_;
  return v >= numeric_value_;
}

std::optional<CompiledCondition> compile_condition(const std::string& text,
                                                   const Schema& schema) {
  static const std::vector<std::string> ops = {"!=", "<=", ">=", "=", "<", ">"};
  size_t op_pos = std::string::npos;
  std::string op;
  for (size_t i = 0; i < text.size(); ++i) {
    for (const auto& candidate : ops) {
      if (text.compare(i, candidate.size(), candidate) == 0) {
        op_pos = i;
        op = candidate;
        break;
      }
    }
    if (op_pos != std::string::npos) break;
  }
  if (op_pos == std::string::npos) return std::nullopt;

  std::string column_text = trim(text.substr(0, op_pos));
  std::string value_text = trim(text.substr(op_pos + op.size()));
  if (column_text.empty() || value_text.empty()) return std::nullopt;
  if (value_text.size() >= 2 &&
      ((value_text.front() == '\'' && value_text.back() == '\'') ||
       (value_text.front() == '"' && value_text.back() == '"'))) {
    value_text = value_text.substr(1, value_text.size() - 2);
  }

  int column = schema.column_index(column_text);
  if (column < 0) {
    for (size_t c = 0; c < schema.columns.size(); ++c) {
      if (to_lower(schema.columns[c].name) == to_lower(column_text)) {
        column = static_cast<int>(c);
        break;
      }
    }
  }
  if (column < 0) return std::nullopt;
  const auto& col = schema.columns[column];

  CompiledCondition out;
  out.text_ = text;
  out.column_ = column;
  out.kind_ = col.kind;
  out.op_ = op;
  if (col.kind == ColumnKind::categorical) {
    if (op != "=" && op != "!=") return std::nullopt;
    if (std::find(col.categories.begin(), col.categories.end(), value_text) ==
        col.categories.end()) {
      return std::nullopt;
    }
    out.category_value_ = value_text;
  } else {
    auto v = parse_double(value_text);
    if (!v) return std::nullopt;
    out.numeric_value_ = *v;
  }
  return out;
}

SyntheticBatch generate(const DataGenProcess& theta, const Schema& schema,
                        const std::vector<Record>& batch, ChatClient& client,
                        const GenConfig& config, const std::optional<std::string>& condition) {
  if (batch.empty()) throw InvalidArgument("generate needs a non-empty example batch");
  if (config.n_examples_per_call < 1 ||
      config.n_examples_per_call > std::max(config.batch_size, static_cast<int>(batch.size()))) {
    throw InvalidArgument("examples per call must lie in [1, batch size]");
  }

  std::optional<CompiledCondition> validator;
  if (condition) validator = compile_condition(*condition, schema);

  SyntheticBatch out;
  out.rows.schema = schema;
  out.source_iteration = theta.iteration;

  bool any_chunk_succeeded = false;
  auto chunks = batches_in_batch(batch, config.n_examples_per_call);
  for (size_t chunk_index = 0; chunk_index < chunks.size(); ++chunk_index) {
    const auto& chunk = chunks[chunk_index];
    const int requested =
        config.samples_per_call > 0 ? config.samples_per_call : static_cast<int>(chunk.size());

    ChatRequest request =
        render_generator_prompt(theta, schema, chunk, requested, condition, config);
    std::vector<Record> parsed;
    bool chunk_ok = false;
    try {
      try {
        parsed = parse_records(client.complete(request), schema).records;
        chunk_ok = true;
      } catch (const ParseError&) {
        ChatRequest retry = request;
        retry.user += "\n\nYour previous response could not be parsed. Respond with ONLY a JSON "
                      "array of records, no surrounding text.";
        parsed = parse_records(client.complete(retry), schema).records;
        chunk_ok = true;
      }
    } catch (const ProviderError& e) {
      out.chunk_errors.push_back("call " + std::to_string(chunk_index + 1) + ": " + e.what());
    } catch (const ParseError& e) {
      out.chunk_errors.push_back("call " + std::to_string(chunk_index + 1) + ": " + e.what());
    }

    int kept = 0;
    if (chunk_ok) {
      any_chunk_succeeded = true;
      for (const auto& record : parsed) {
        if (kept == requested) break;  // over-delivery is truncated
        if (validator && !validator->matches(record)) continue;
        if (std::find(chunk.begin(), chunk.end(), record) != chunk.end()) {
          ++out.copies_of_examples;
        }
        out.rows.rows.push_back(record);
        ++kept;
      }
    }
    out.rejected += requested - kept;
  }

  if (!any_chunk_succeeded) {
    throw GenerationError("every generation call failed: " + join(out.chunk_errors, "; "));
  }
  return out;
}

}  // namespace tabgan
