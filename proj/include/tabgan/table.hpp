#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace tabgan {

enum class ColumnKind { numeric, categorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::string description;
  std::vector<std::string> categories;  // categorical columns only

  bool operator==(const ColumnSpec&) const = default;
};

struct Schema {
  std::vector<ColumnSpec> columns;
  std::string context;  // free-text dataset description
  std::string target;   // label column name, may be empty

  int column_index(const std::string& name) const;         // -1 when absent
  const ColumnSpec& column(const std::string& name) const;  // throws SchemaError
  void validate() const;                                    // throws SchemaError

  bool operator==(const Schema&) const = default;
};

// Cell value: numeric columns hold double, categorical hold the category string.
using Value = std::variant<double, std::string>;

struct Record {
  std::vector<Value> values;  // schema column order

  bool operator==(const Record&) const = default;
};

struct Table {
  Schema schema;
  std::vector<Record> rows;

  size_t size() const { return rows.size(); }
};

// Returns an error description when the record does not fit the schema.
std::optional<std::string> check_record(const Schema& schema, const Record& record);

// Validates every row; throws InvalidArgument naming the first bad row.
Table make_table(Schema schema, std::vector<Record> rows);

// Schema (de)serialization for sidecar files.
std::string schema_to_json(const Schema& schema);
Schema schema_from_json(const std::string& json_text);  // throws SchemaError
Schema load_schema(const std::string& path);

// Column-kind inference from raw CSV cells. A column is categorical when a
// non-numeric value occurs or its distinct-value count is at most
// max_categories; otherwise numeric. Categories keep first-appearance order.
Schema infer_schema(const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& raw_rows,
                    int max_categories = 10);

// RFC-4180 style parse: quoted fields, doubled quotes, embedded separators
// and newlines. Each field is whitespace-trimmed after unquoting.
std::vector<std::vector<std::string>> parse_csv_text(const std::string& text);

// Loads a CSV with a header row. With a schema, header names are matched
// (any order) and cells are validated against it; without one the schema is
// inferred. Malformed cells raise CsvError naming the data row and column.
Table load_csv(const std::string& path, const std::optional<Schema>& schema = std::nullopt,
               int max_categories = 10);

void write_csv(const Table& table, const std::string& path);

// One record as single-line JSON with keys in schema order, e.g.
// {"age": 53.0, "workclass": "Private"}. Numeric values use the shortest
// representation that round-trips, with ".0" kept on integral values.
std::string serialize_record(const Schema& schema, const Record& record);

// JSON array of records: [obj, obj, ...].
std::string serialize_records(const Schema& schema, const std::vector<Record>& records);

struct ParsedRecords {
  std::vector<Record> records;
  int rejected = 0;  // elements dropped for schema violations
};

// Recovers records from model output text: finds the first parseable JSON
// array (tolerating surrounding prose, code fences, and single-quoted
// strings), validates each element against the schema, and drops invalid
// ones. Throws ParseError when no JSON array can be found at all.
ParsedRecords parse_records(const std::string& text, const Schema& schema);

// Deterministic shuffled split into (train, test) with n_train rows in train.
// Row order within each side follows the original table.
std::pair<Table, Table> split_table(const Table& table, int n_train, uint64_t seed);

struct NumericRange {
  double min = 0.0;
  double max = 0.0;
};

struct EncodedColumn {
  std::string source;    // schema column name
  std::string category;  // empty for numeric columns
};

struct FeatureMatrix {
  std::vector<std::vector<double>> rows;
  std::vector<EncodedColumn> columns;
  std::vector<NumericRange> normalization;  // per schema column; categorical slots unused
};

// Numeric columns min-max normalized to the fit range (constant columns map
// to 0.0; values outside the range are not clamped). Categorical columns
// one-hot over the schema's category list, in schema column order.
class FeatureEncoder {
 public:
  static FeatureEncoder fit(const Table& table);
  FeatureMatrix transform(const Table& table) const;  // schema must match fit
  const Schema& schema() const { return schema_; }
  int width() const;

 private:
  Schema schema_;
  std::vector<NumericRange> ranges_;
};

FeatureMatrix encode_features(const Table& table);
FeatureMatrix encode_features(const Table& table, const FeatureEncoder& encoder);

}  // namespace tabgan
