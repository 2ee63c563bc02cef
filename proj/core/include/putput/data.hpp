#pragma once

#include <putput/bits.hpp>
#include <putput/circuit.hpp>
#include <putput/random.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace putput {

// Cardinality above which a variable triggers a one-hot blowup warning.
inline constexpr std::size_t kWideVariable = 256;

struct Variable {
  std::string name;
  std::vector<std::string> values;
};

// Multi-valued variables and their one-hot expansion. Variable blocks are laid
// out contiguously in schema order, values in declaration order: boolean id
// of (variable a, value i) is offset(a) + i.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<Variable> variables);

  std::size_t size() const noexcept { return variables_.size(); }
  const Variable& variable(std::size_t a) const { return variables_.at(a); }
  std::span<const Variable> variables() const noexcept { return variables_; }
  std::size_t cardinality(std::size_t a) const { return variables_.at(a).values.size(); }

  std::size_t num_bool() const noexcept { return num_bool_; }
  std::size_t offset(std::size_t a) const { return offsets_.at(a); }
  VarId bool_id(std::size_t a, std::size_t value) const {
    return static_cast<VarId>(offsets_.at(a) + value);
  }
  // (variable, value index) of a boolean id.
  std::pair<std::size_t, std::size_t> decode(VarId id) const;
  // "name=value", used when rendering boolean literals.
  std::string bool_name(VarId id) const;

  std::optional<std::size_t> find(std::string_view name) const;
  std::optional<std::size_t> value_index(std::size_t a, std::string_view value) const;

  friend bool operator==(const Schema& a, const Schema& b) {
    return a.variables_.size() == b.variables_.size() &&
           std::equal(a.variables_.begin(), a.variables_.end(), b.variables_.begin(),
                      [](const Variable& x, const Variable& y) {
                        return x.name == y.name && x.values == y.values;
                      });
  }

 private:
  std::vector<Variable> variables_;
  std::vector<std::size_t> offsets_;
  std::vector<VarId> owner_;  // boolean id -> variable
  std::size_t num_bool_ = 0;
  std::unordered_map<std::string, std::size_t> by_name_;
  std::vector<std::unordered_map<std::string, std::size_t>> by_value_;
};

// Value index per schema variable.
using Example = std::vector<std::uint32_t>;
// Sorted, duplicate-free row indices into a database.
using ExampleSet = std::vector<std::size_t>;

// One-hot expansion: exactly one bit set per variable block.
std::vector<std::uint8_t> binarize(const Example& e, const Schema& schema);
// Inverse of binarize. Throws InputError when a block is not one-hot.
Example unbinarize(std::span<const std::uint8_t> bits, const Schema& schema);

// A set of unique examples over a schema, with row-major and column-major
// boolean views precomputed. Immutable after construction.
class Database {
 public:
  Database() = default;
  // Duplicate rows are dropped (first occurrence kept) and counted.
  Database(Schema schema, std::vector<Example> rows);

  const Schema& schema() const noexcept { return schema_; }
  std::size_t size() const noexcept { return rows_.size(); }
  const Example& row(std::size_t r) const { return rows_.at(r); }
  std::span<const Example> rows() const noexcept { return rows_; }
  std::span<const std::uint8_t> bits(std::size_t r) const {
    return {bits_.data() + r * schema_.num_bool(), schema_.num_bool()};
  }
  const BooleanColumns& columns() const noexcept { return columns_; }

  std::size_t duplicates_removed() const noexcept { return duplicates_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

  // Row index of an example, if present.
  std::optional<std::size_t> find(const Example& e) const;

  RowSet to_rows(const ExampleSet& set) const;
  ExampleSet all() const;

 private:
  Schema schema_;
  std::vector<Example> rows_;
  std::vector<std::uint8_t> bits_;
  BooleanColumns columns_;
  std::size_t duplicates_ = 0;
  std::vector<std::string> warnings_;
  std::unordered_map<std::string, std::size_t> index_;
};

ExampleSet to_example_set(const RowSet& rows);

// CSV (RFC 4180, UTF-8) with a header row. Cells are trimmed and compared as
// exact strings. Without an explicit schema, each column's values are taken in
// first-seen order. Throws ParseError on ragged rows or empty cells and
// InputError on values outside an explicit schema.
Database read_csv(std::istream& is, const std::optional<Schema>& schema = {});
Database load_csv(const std::filesystem::path& path,
                  const std::optional<Schema>& schema = {});
void write_csv(std::ostream& os, const Database& db);
void write_csv_file(const std::filesystem::path& path, const Database& db);

// Schema sidecar: one `<name>: <v1>|<v2>|...` line per variable. '\' escapes
// '|', ':' and '\' inside names and values.
void write_schema(std::ostream& os, const Schema& schema);
void write_schema_file(const std::filesystem::path& path, const Schema& schema);
Schema read_schema(std::istream& is);
Schema read_schema_file(const std::filesystem::path& path);

// Example-set files hold newline-separated row indices, or a CSV whose header
// matches the database's.
ExampleSet read_example_set(std::istream& is, const Database& db);
ExampleSet read_example_set_file(const std::filesystem::path& path, const Database& db);
void write_example_set(std::ostream& os, const ExampleSet& set);
void write_example_set_file(const std::filesystem::path& path, const ExampleSet& set);

// Uniform random subset of `count` members of `from`, without replacement.
ExampleSet sample_without_replacement(const ExampleSet& from, std::size_t count,
                                      Rng& rng);

// log p(x) for every row, evaluated in parallel.
std::vector<double> log_likelihoods(const ProbCircuit& pc, const Database& db);

// {e in db : p(e) >= t}. The comparison is done in log space; t = 0 selects
// every row, including those with p(e) = 0.
ExampleSet compute_target(const ProbCircuit& pc, const Database& db, double t);
// Same with a log-space threshold: {e : log p(e) >= log_t}.
ExampleSet compute_target_log(const ProbCircuit& pc, const Database& db, double log_t);

}  // namespace putput
