#include "tabgan/table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "tabgan/errors.hpp"
#include "tabgan/text_util.hpp"

namespace tabgan {

namespace {

std::string json_quote(const std::string& s) { return nlohmann::json(s).dump(); }

std::string kind_name(ColumnKind kind) {
  return kind == ColumnKind::numeric ? "numeric" : "categorical";
}

ColumnKind kind_from_name(const std::string& name) {
  if (name == "numeric") return ColumnKind::numeric;
  if (name == "categorical") return ColumnKind::categorical;
  throw SchemaError("unknown column kind: " + name);
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace

int Schema::column_index(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

const ColumnSpec& Schema::column(const std::string& name) const {
  int idx = column_index(name);
  if (idx < 0) throw SchemaError("no such column: " + name);
  return columns[idx];
}

void Schema::validate() const {
  if (columns.empty()) throw SchemaError("schema has no columns");
  std::unordered_set<std::string> seen;
  for (const auto& col : columns) {
    if (col.name.empty()) throw SchemaError("schema has a column with an empty name");
    if (!seen.insert(col.name).second) throw SchemaError("duplicate column name: " + col.name);
    if (col.kind == ColumnKind::categorical) {
      if (col.categories.empty()) {
        throw SchemaError("categorical column '" + col.name + "' has no categories");
      }
      std::unordered_set<std::string> cats;
      for (const auto& c : col.categories) {
        if (!cats.insert(c).second) {
          throw SchemaError("column '" + col.name + "' repeats category '" + c + "'");
        }
      }
    } else if (!col.categories.empty()) {
      throw SchemaError("numeric column '" + col.name + "' declares categories");
    }
  }
  if (!target.empty() && column_index(target) < 0) {
    throw SchemaError("target column '" + target + "' does not exist");
  }
}

std::optional<std::string> check_record(const Schema& schema, const Record& record) {
  if (record.values.size() != schema.columns.size()) {
    return "expected " + std::to_string(schema.columns.size()) + " values, got " +
           std::to_string(record.values.size());
  }
  for (size_t i = 0; i < schema.columns.size(); ++i) {
    const auto& col = schema.columns[i];
    if (col.kind == ColumnKind::numeric) {
      if (!std::holds_alternative<double>(record.values[i])) {
        return "column '" + col.name + "': expected a numeric value";
      }
      if (!std::isfinite(std::get<double>(record.values[i]))) {
        return "column '" + col.name + "': non-finite value";
      }
    } else {
      if (!std::holds_alternative<std::string>(record.values[i])) {
        return "column '" + col.name + "': expected a category string";
      }
      const auto& v = std::get<std::string>(record.values[i]);
      if (std::find(col.categories.begin(), col.categories.end(), v) == col.categories.end()) {
        return "column '" + col.name + "': unknown category '" + v + "'";
      }
    }
  }
  return std::nullopt;
}

Table make_table(Schema schema, std::vector<Record> rows) {
  schema.validate();
  for (size_t r = 0; r < rows.size(); ++r) {
    if (auto err = check_record(schema, rows[r])) {
      throw InvalidArgument("row " + std::to_string(r + 1) + ": " + *err);
    }
  }
  return Table{std::move(schema), std::move(rows)};
}

std::string schema_to_json(const Schema& schema) {
  nlohmann::json j;
  j["context"] = schema.context;
  j["target"] = schema.target;
  j["columns"] = nlohmann::json::array();
  for (const auto& col : schema.columns) {
    nlohmann::json c;
    c["name"] = col.name;
    c["kind"] = kind_name(col.kind);
    if (!col.description.empty()) c["description"] = col.description;
    if (col.kind == ColumnKind::categorical) c["categories"] = col.categories;
    j["columns"].push_back(std::move(c));
  }
  return j.dump(2) + "\n";
}

Schema schema_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("schema file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("columns") || !j["columns"].is_array()) {
    throw SchemaError("schema JSON must be an object with a 'columns' array");
  }
  Schema schema;
  schema.context = j.value("context", std::string());
  schema.target = j.value("target", std::string());
  for (const auto& c : j["columns"]) {
    if (!c.is_object() || !c.contains("name") || !c.contains("kind")) {
      throw SchemaError("each column needs 'name' and 'kind'");
    }
    ColumnSpec col;
    col.name = c["name"].get<std::string>();
    col.kind = kind_from_name(c["kind"].get<std::string>());
    col.description = c.value("description", std::string());
    if (c.contains("categories")) {
      for (const auto& cat : c["categories"]) col.categories.push_back(cat.get<std::string>());
    }
    schema.columns.push_back(std::move(col));
  }
  schema.validate();
  return schema;
}

Schema load_schema(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw SchemaError(e.what());
  }
  return schema_from_json(text);
}

Schema infer_schema(const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& raw_rows,
                    int max_categories) {
  if (header.empty()) throw CsvError("CSV has no header");
  Schema schema;
  for (size_t c = 0; c < header.size(); ++c) {
    ColumnSpec col;
    col.name = header[c];
    bool all_numeric = true;
    std::vector<std::string> distinct;
    std::unordered_set<std::string> seen;
    int observed = 0;
    for (const auto& row : raw_rows) {
      if (c >= row.size()) continue;
      const std::string& cell = row[c];
      if (cell.empty()) continue;
      ++observed;
      if (all_numeric && !parse_double(cell)) all_numeric = false;
      if (seen.insert(cell).second) distinct.push_back(cell);
    }
    if (observed == 0) throw CsvError("column '" + col.name + "' has no values to infer from");
    if (!all_numeric || static_cast<int>(distinct.size()) <= max_categories) {
      col.kind = ColumnKind::categorical;
      col.categories = std::move(distinct);
    } else {
      col.kind = ColumnKind::numeric;
    }
    schema.columns.push_back(std::move(col));
  }
  schema.target = header.back();
  schema.validate();
  return schema;
}

std::vector<std::vector<std::string>> parse_csv_text(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool row_started = false;

  auto end_field = [&] {
    row.push_back(field_was_quoted ? field : trim(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(row);
    row.clear();
    row_started = false;
  };

  size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          i += 2;
          continue;
        }
        in_quotes = false;
        ++i;
        continue;
      }
      field += c;
      ++i;
      continue;
    }
    if (c == '"' && trim(field).empty()) {
      in_quotes = true;
      field_was_quoted = true;
      field.clear();
      row_started = true;
      ++i;
      continue;
    }
    if (c == ',') {
      end_field();
      row_started = true;
      ++i;
      continue;
    }
    if (c == '\n') {
      if (row_started || !trim(field).empty()) end_row();
      field.clear();
      ++i;
      continue;
    }
    if (c != '\r') {
      field += c;
      row_started = true;
    }
    ++i;
  }
  if (in_quotes) throw CsvError("unterminated quoted field");
  if (row_started || !trim(field).empty()) end_row();
  return rows;
}

Table load_csv(const std::string& path, const std::optional<Schema>& schema_opt,
               int max_categories) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw CsvError(e.what());
  }
  auto raw = parse_csv_text(text);
  if (raw.empty()) throw CsvError("empty CSV: " + path);

  const auto& header = raw.front();
  std::unordered_set<std::string> names;
  for (const auto& h : header) {
    if (h.empty()) throw CsvError("CSV header has an empty column name");
    if (!names.insert(h).second) throw CsvError("CSV header repeats column '" + h + "'");
  }

  std::vector<std::vector<std::string>> data(raw.begin() + 1, raw.end());
  Schema schema = schema_opt ? *schema_opt : infer_schema(header, data, max_categories);
  schema.validate();

  std::vector<int> source_index(schema.columns.size(), -1);
  for (size_t c = 0; c < schema.columns.size(); ++c) {
    auto it = std::find(header.begin(), header.end(), schema.columns[c].name);
    if (it == header.end()) {
      throw CsvError("CSV is missing column '" + schema.columns[c].name + "'");
    }
    source_index[c] = static_cast<int>(it - header.begin());
  }
  if (header.size() != schema.columns.size()) {
    for (const auto& h : header) {
      if (schema.column_index(h) < 0) throw CsvError("CSV has unexpected column '" + h + "'");
    }
  }

  Table table;
  table.schema = schema;
  table.rows.reserve(data.size());
  for (size_t r = 0; r < data.size(); ++r) {
    const auto& cells = data[r];
    if (cells.size() != header.size()) {
      throw CsvError("row " + std::to_string(r + 1) + ": expected " +
                     std::to_string(header.size()) + " fields, got " +
                     std::to_string(cells.size()));
    }
    Record rec;
    rec.values.reserve(schema.columns.size());
    for (size_t c = 0; c < schema.columns.size(); ++c) {
      const auto& col = schema.columns[c];
      const std::string& cell = cells[source_index[c]];
      if (cell.empty()) {
        throw CsvError("row " + std::to_string(r + 1) + ", column '" + col.name +
                       "': missing value");
      }
      if (col.kind == ColumnKind::numeric) {
        auto v = parse_double(cell);
        if (!v) {
          throw CsvError("row " + std::to_string(r + 1) + ", column '" + col.name +
                         "': cannot parse numeric value '" + cell + "'");
        }
        rec.values.emplace_back(*v);
      } else {
        if (std::find(col.categories.begin(), col.categories.end(), cell) ==
            col.categories.end()) {
          throw CsvError("row " + std::to_string(r + 1) + ", column '" + col.name +
                         "': unknown category '" + cell + "'");
        }
        rec.values.emplace_back(cell);
      }
    }
    table.rows.push_back(std::move(rec));
  }
  return table;
}

void write_csv(const Table& table, const std::string& path) {
  std::string out;
  for (size_t c = 0; c < table.schema.columns.size(); ++c) {
    if (c) out += ",";
    out += csv_quote(table.schema.columns[c].name);
  }
  out += "\n";
  for (const auto& row : table.rows) {
    for (size_t c = 0; c < row.values.size(); ++c) {
      if (c) out += ",";
      if (std::holds_alternative<double>(row.values[c])) {
        out += format_double(std::get<double>(row.values[c]));
      } else {
        out += csv_quote(std::get<std::string>(row.values[c]));
      }
    }
    out += "\n";
  }
  write_file(path, out);
}

std::string serialize_record(const Schema& schema, const Record& record) {
  if (auto err = check_record(schema, record)) {
    throw InvalidArgument("cannot serialize record: " + *err);
  }
  std::string out = "{";
  for (size_t i = 0; i < schema.columns.size(); ++i) {
    if (i) out += ", ";
    out += json_quote(schema.columns[i].name) + ": ";
    if (std::holds_alternative<double>(record.values[i])) {
      out += format_double(std::get<double>(record.values[i]));
    } else {
      out += json_quote(std::get<std::string>(record.values[i]));
    }
  }
  out += "}";
  return out;
}

std::string serialize_records(const Schema& schema, const std::vector<Record>& records) {
  std::vector<std::string> parts;
  parts.reserve(records.size());
  for (const auto& r : records) parts.push_back(serialize_record(schema, r));
  return "[" + join(parts, ", ") + "]";
}

namespace {

// Index one past the matching ']' for the '[' at `open`, or npos.
size_t match_bracket(const std::string& text, size_t open) {
  int depth = 0;
  size_t i = open;
  while (i < text.size()) {
    char c = text[i];
    if (c == '"') {
      ++i;
      while (i < text.size() && text[i] != '"') {
        if (text[i] == '\\') ++i;
        ++i;
      }
      if (i >= text.size()) return std::string::npos;
      ++i;
      continue;
    }
    if (c == '\'') {
      ++i;
      while (i < text.size() && text[i] != '\'') ++i;
      if (i >= text.size()) return std::string::npos;
      ++i;
      continue;
    }
    if (c == '[') ++depth;
    if (c == ']') {
      --depth;
      if (depth == 0) return i + 1;
    }
    ++i;
  }
  return std::string::npos;
}

std::string repair_single_quotes(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool in_double = false;
  bool in_single = false;
  for (size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (in_double) {
      out += c;
      if (c == '\\' && i + 1 < s.size()) {
        out += s[++i];
        continue;
      }
      if (c == '"') in_double = false;
      continue;
    }
    if (in_single) {
      if (c == '\'') {
        out += '"';
        in_single = false;
      } else if (c == '"') {
        out += "\\\"";
      } else if (c == '\\' && i + 1 < s.size() && s[i + 1] == '\'') {
        out += '\'';
        ++i;
      } else {
        out += c;
      }
      continue;
    }
    if (c == '"') {
      in_double = true;
      out += c;
    } else if (c == '\'') {
      in_single = true;
      out += '"';
    } else {
      out += c;
    }
  }
  return out;
}

std::optional<nlohmann::json> try_parse(const std::string& s) {
  nlohmann::json j = nlohmann::json::parse(s, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

std::optional<Record> record_from_json(const nlohmann::json& el, const Schema& schema) {
  if (!el.is_object()) return std::nullopt;
  Record rec;
  rec.values.reserve(schema.columns.size());
  for (const auto& col : schema.columns) {
    auto it = el.find(col.name);
    if (it == el.end()) return std::nullopt;
    if (col.kind == ColumnKind::numeric) {
      double v = 0.0;
      if (it->is_number()) {
        v = it->get<double>();
      } else if (it->is_string()) {
        auto parsed = parse_double(it->get<std::string>());
        if (!parsed) return std::nullopt;
        v = *parsed;
      } else {
        return std::nullopt;
      }
      if (!std::isfinite(v)) return std::nullopt;
      rec.values.emplace_back(v);
    } else {
      std::vector<std::string> candidates;
      if (it->is_string()) {
        candidates.push_back(it->get<std::string>());
      } else if (it->is_number()) {
        double v = it->get<double>();
        candidates.push_back(format_double(v));
        if (std::isfinite(v) && v == std::floor(v)) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
          candidates.emplace_back(buf);
        }
      } else if (it->is_boolean()) {
        candidates.push_back(it->get<bool>() ? "true" : "false");
      } else {
        return std::nullopt;
      }
      std::string matched;
      for (const auto& cand : candidates) {
        if (std::find(col.categories.begin(), col.categories.end(), cand) !=
            col.categories.end()) {
          matched = cand;
          break;
        }
      }
      if (matched.empty()) return std::nullopt;
      rec.values.emplace_back(matched);
    }
  }
  return rec;
}

}  // namespace

ParsedRecords parse_records(const std::string& text, const Schema& schema) {
  std::optional<nlohmann::json> arr;
  for (size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '[') continue;
    size_t end = match_bracket(text, i);
    if (end == std::string::npos) continue;
    std::string candidate = text.substr(i, end - i);
    auto j = try_parse(candidate);
    if (!j || !j->is_array()) j = try_parse(repair_single_quotes(candidate));
    if (j && j->is_array()) {
      arr = std::move(j);
      break;
    }
  }
  if (!arr) throw ParseError("no JSON array of records found in response");
  ParsedRecords out;
  for (const auto& el : *arr) {
    if (auto rec = record_from_json(el, schema)) {
      out.records.push_back(std::move(*rec));
    } else {
      ++out.rejected;
    }
  }
  return out;
}

std::pair<Table, Table> split_table(const Table& table, int n_train, uint64_t seed) {
  const int n = static_cast<int>(table.rows.size());
  if (n_train <= 0 || n_train >= n) {
    throw InvalidArgument("split needs 0 < n_train < " + std::to_string(n) + ", got " +
                          std::to_string(n_train));
  }
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<char> in_train(n, 0);
  for (int i = 0; i < n_train; ++i) in_train[idx[i]] = 1;

  Table train;
  train.schema = table.schema;
  Table test;
  test.schema = table.schema;
  for (int i = 0; i < n; ++i) {
    if (in_train[i]) train.rows.push_back(table.rows[i]);
    else test.rows.push_back(table.rows[i]);
  }
  return {std::move(train), std::move(test)};
}

FeatureEncoder FeatureEncoder::fit(const Table& table) {
  if (table.rows.empty()) throw InvalidArgument("cannot fit an encoder on an empty table");
  table.schema.validate();
  FeatureEncoder enc;
  enc.schema_ = table.schema;
  enc.ranges_.resize(table.schema.columns.size());
  for (size_t c = 0; c < table.schema.columns.size(); ++c) {
    if (table.schema.columns[c].kind != ColumnKind::numeric) continue;
    double lo = std::get<double>(table.rows[0].values[c]);
    double hi = lo;
    for (const auto& row : table.rows) {
      double v = std::get<double>(row.values[c]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    enc.ranges_[c] = NumericRange{lo, hi};
  }
  return enc;
}

int FeatureEncoder::width() const {
  int w = 0;
  for (const auto& col : schema_.columns) {
    w += col.kind == ColumnKind::numeric ? 1 : static_cast<int>(col.categories.size());
  }
  return w;
}

FeatureMatrix FeatureEncoder::transform(const Table& table) const {
  if (!(table.schema == schema_)) {
    throw InvalidArgument("table schema does not match the fitted encoder");
  }
  FeatureMatrix m;
  m.normalization = ranges_;
  for (const auto& col : schema_.columns) {
    if (col.kind == ColumnKind::numeric) {
      m.columns.push_back(EncodedColumn{col.name, ""});
    } else {
      for (const auto& cat : col.categories) m.columns.push_back(EncodedColumn{col.name, cat});
    }
  }
  m.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    if (auto err = check_record(schema_, row)) {
      throw InvalidArgument("cannot encode record: " + *err);
    }
    std::vector<double> enc;
    enc.reserve(m.columns.size());
    for (size_t c = 0; c < schema_.columns.size(); ++c) {
      const auto& col = schema_.columns[c];
      if (col.kind == ColumnKind::numeric) {
        double v = std::get<double>(row.values[c]);
        const auto& r = ranges_[c];
        enc.push_back(r.max > r.min ? (v - r.min) / (r.max - r.min) : 0.0);
      } else {
        const auto& v = std::get<std::string>(row.values[c]);
        for (const auto& cat : col.categories) enc.push_back(cat == v ? 1.0 : 0.0);
      }
    }
    m.rows.push_back(std::move(enc));
  }
  return m;
}

FeatureMatrix encode_features(const Table& table) {
  return FeatureEncoder::fit(table).transform(table);
}

FeatureMatrix encode_features(const Table& table, const FeatureEncoder& encoder) {
  return encoder.transform(table);
}

}  // namespace tabgan
