#include <putput/data.hpp>
#include <putput/errors.hpp>
#include <putput/parallel.hpp>

#include <algorithm>
#include <charconv>
#include <cstring>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace putput {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string row_key(const Example& e) {
  std::string key(e.size() * sizeof(std::uint32_t), '\0');
  std::memcpy(key.data(), e.data(), key.size());
  return key;
}

// RFC 4180 record reader. Returns false at end of input. `line` tracks the
// physical line where the record started.
bool read_record(std::istream& is, std::vector<std::string>& fields,
                 std::size_t& line) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool quoted_field = false;
  bool any = false;
  int ch;
  ++line;
  while ((ch = is.get()) != EOF) {
    any = true;
    const char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (is.peek() == '"') {
          field += '"';
          is.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && trim(field).empty() && !quoted_field) {
      in_quotes = true;
      quoted_field = true;
      field.clear();
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      quoted_field = false;
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      return true;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", line);
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

bool blank_record(const std::vector<std::string>& fields) {
  return fields.size() == 1 && trim(fields[0]).empty();
}

std::string csv_quote(const std::string& v) {
  if (v.find_first_of(",\"\r\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string escape_sidecar(const std::string& v) {
  std::string out;
  for (char c : v) {
    if (c == '|' || c == ':' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

Schema::Schema(std::vector<Variable> variables) : variables_(std::move(variables)) {
  by_value_.resize(variables_.size());
  for (std::size_t a = 0; a < variables_.size(); ++a) {
    const auto& v = variables_[a];
    if (v.values.empty())
      throw InputError("variable '" + v.name + "' has no values");
    if (!by_name_.emplace(v.name, a).second)
      throw InputError("duplicate variable '" + v.name + "'");
    for (std::size_t i = 0; i < v.values.size(); ++i)
      if (!by_value_[a].emplace(v.values[i], i).second)
        throw InputError("duplicate value '" + v.values[i] + "' of variable '" +
                         v.name + "'");
    offsets_.push_back(num_bool_);
    num_bool_ += v.values.size();
    owner_.insert(owner_.end(), v.values.size(), static_cast<VarId>(a));
  }
}

std::pair<std::size_t, std::size_t> Schema::decode(VarId id) const {
  if (id >= num_bool_) throw InputError("boolean id " + std::to_string(id) + " out of range");
  const std::size_t a = owner_[id];
  return {a, id - offsets_[a]};
}

std::string Schema::bool_name(VarId id) const {
  const auto [a, i] = decode(id);
  return variables_[a].name + "=" + variables_[a].values[i];
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  const auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Schema::value_index(std::size_t a,
                                               std::string_view value) const {
  const auto& m = by_value_.at(a);
  const auto it = m.find(std::string(value));
  if (it == m.end()) return std::nullopt;
  return it->second;
}

std::vector<std::uint8_t> binarize(const Example& e, const Schema& schema) {
  if (e.size() != schema.size())
    throw InputError("example has " + std::to_string(e.size()) +
                     " values, schema has " + std::to_string(schema.size()) +
                     " variables");
  std::vector<std::uint8_t> bits(schema.num_bool(), 0);
  for (std::size_t a = 0; a < e.size(); ++a) {
    if (e[a] >= schema.cardinality(a))
      throw InputError("unknown value index " + std::to_string(e[a]) +
                       " for variable '" + schema.variable(a).name + "'");
    bits[schema.bool_id(a, e[a])] = 1;
  }
  return bits;
}

Example unbinarize(std::span<const std::uint8_t> bits, const Schema& schema) {
  if (bits.size() != schema.num_bool())
    throw InputError("boolean vector length does not match schema");
  Example e(schema.size());
  for (std::size_t a = 0; a < schema.size(); ++a) {
    std::size_t set = 0;
    for (std::size_t i = 0; i < schema.cardinality(a); ++i)
      if (bits[schema.bool_id(a, i)]) {
        e[a] = static_cast<std::uint32_t>(i);
        ++set;
      }
    if (set != 1)
      throw InputError("block of variable '" + schema.variable(a).name +
                       "' is not one-hot");
  }
  return e;
}

// ---------------------------------------------------------------------------

Database::Database(Schema schema, std::vector<Example> rows)
    : schema_(std::move(schema)) {
  rows_.reserve(rows.size());
  for (auto& r : rows) {
    binarize(r, schema_);  // conformance check
    if (index_.emplace(row_key(r), rows_.size()).second)
      rows_.push_back(std::move(r));
    else
      ++duplicates_;
  }
  if (duplicates_ > 0)
    warnings_.push_back(std::to_string(duplicates_) + " duplicate row(s) removed");
  for (std::size_t a = 0; a < schema_.size(); ++a)
    if (schema_.cardinality(a) > kWideVariable)
      warnings_.push_back("variable '" + schema_.variable(a).name + "' has " +
                          std::to_string(schema_.cardinality(a)) +
                          " values; one-hot expansion is large");

  const std::size_t nb = schema_.num_bool();
  bits_.assign(rows_.size() * nb, 0);
  columns_.rows = rows_.size();
  columns_.columns.assign(nb, RowSet(rows_.size()));
  for (std::size_t r = 0; r < rows_.size(); ++r)
    for (std::size_t a = 0; a < schema_.size(); ++a) {
      const VarId b = schema_.bool_id(a, rows_[r][a]);
      bits_[r * nb + b] = 1;
      columns_.columns[b].set(r);
    }
}

std::optional<std::size_t> Database::find(const Example& e) const {
  const auto it = index_.find(row_key(e));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

RowSet Database::to_rows(const ExampleSet& set) const {
  RowSet rows(size());
  for (std::size_t r : set) {
    if (r >= size())
      throw InputError("row index " + std::to_string(r) + " outside database of " +
                       std::to_string(size()) + " rows");
    rows.set(r);
  }
  return rows;
}

ExampleSet Database::all() const {
  ExampleSet s(size());
  std::iota(s.begin(), s.end(), std::size_t{0});
  return s;
}

ExampleSet to_example_set(const RowSet& rows) {
  ExampleSet s;
  s.reserve(rows.count());
  for (auto r = rows.find_first(); r != RowSet::npos; r = rows.find_next(r))
    s.push_back(r);
  return s;
}

// ---------------------------------------------------------------------------

Database read_csv(std::istream& is, const std::optional<Schema>& schema) {
  std::vector<std::string> fields;
  std::size_t line = 0;
  std::vector<std::string> header;
  while (read_record(is, fields, line)) {
    if (blank_record(fields)) continue;
    for (auto& f : fields) header.emplace_back(trim(f));
    break;
  }
  if (header.empty()) throw ParseError("missing CSV header");
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c].empty()) throw ParseError("empty column name", line);

  // Column c feeds schema variable column_var[c].
  std::vector<std::size_t> column_var(header.size());
  std::vector<Variable> inferred;
  std::vector<std::unordered_map<std::string, std::uint32_t>> seen;
  if (schema) {
    if (header.size() != schema->size())
      throw InputError("CSV has " + std::to_string(header.size()) +
                       " columns, schema has " + std::to_string(schema->size()));
    std::vector<bool> used(schema->size(), false);
    for (std::size_t c = 0; c < header.size(); ++c) {
      const auto a = schema->find(header[c]);
      if (!a) throw InputError("column '" + header[c] + "' is not in the schema");
      if (used[*a]) throw InputError("column '" + header[c] + "' repeated");
      used[*a] = true;
      column_var[c] = *a;
    }
  } else {
    for (std::size_t c = 0; c < header.size(); ++c) {
      column_var[c] = c;
      inferred.push_back({header[c], {}});
    }
    seen.resize(header.size());
  }

  std::vector<Example> rows;
  std::size_t record = 0;
  while (true) {
    const std::size_t start = line + 1;
    if (!read_record(is, fields, line)) break;
    if (blank_record(fields)) continue;
    ++record;
    if (fields.size() != header.size())
      throw ParseError("row " + std::to_string(record) + " has " +
                           std::to_string(fields.size()) + " cells, expected " +
                           std::to_string(header.size()),
                       start);
    Example e(header.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string value(trim(fields[c]));
      if (value.empty())
        throw ParseError("row " + std::to_string(record) + ", column '" + header[c] +
                             "': empty cell",
                         start);
      const std::size_t a = column_var[c];
      if (schema) {
        const auto idx = schema->value_index(a, value);
        if (!idx)
          throw InputError("row " + std::to_string(record) + ", column '" +
                           header[c] + "': value '" + value + "' not in schema");
        e[a] = static_cast<std::uint32_t>(*idx);
      } else {
        auto [it, fresh] = seen[c].emplace(
            value, static_cast<std::uint32_t>(inferred[c].values.size()));
        if (fresh) inferred[c].values.push_back(value);
        e[a] = it->second;
      }
    }
    rows.push_back(std::move(e));
  }
  return Database(schema ? *schema : Schema(std::move(inferred)), std::move(rows));
}

Database load_csv(const std::filesystem::path& path, const std::optional<Schema>& schema) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  return read_csv(is, schema);
}

void write_csv(std::ostream& os, const Database& db) {
  const auto& s = db.schema();
  for (std::size_t a = 0; a < s.size(); ++a)
    os << (a ? "," : "") << csv_quote(s.variable(a).name);
  os << '\n';
  for (const auto& row : db.rows()) {
    for (std::size_t a = 0; a < s.size(); ++a)
      os << (a ? "," : "") << csv_quote(s.variable(a).values[row[a]]);
    os << '\n';
  }
}

void write_csv_file(const std::filesystem::path& path, const Database& db) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  write_csv(os, db);
}

// ---------------------------------------------------------------------------

void write_schema(std::ostream& os, const Schema& schema) {
  for (const auto& v : schema.variables()) {
    os << escape_sidecar(v.name) << ':';
    for (std::size_t i = 0; i < v.values.size(); ++i)
      os << (i ? "|" : " ") << escape_sidecar(v.values[i]);
    os << '\n';
  }
}

void write_schema_file(const std::filesystem::path& path, const Schema& schema) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  write_schema(os, schema);
}

Schema read_schema(std::istream& is) {
  std::vector<Variable> vars;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (trim(raw).empty()) continue;
    Variable v;
    std::string cur;
    bool in_name = true;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const char c = raw[i];
      if (c == '\\') {
        if (i + 1 == raw.size()) throw ParseError("dangling escape", lineno);
        cur += raw[++i];
      } else if (in_name && c == ':') {
        v.name = cur;
        cur.clear();
        in_name = false;
        if (i + 1 < raw.size() && raw[i + 1] == ' ') ++i;
      } else if (!in_name && c == '|') {
        v.values.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (in_name) throw ParseError("expected '<name>: <v1>|<v2>|...'", lineno);
    v.values.push_back(cur);
    for (const auto& val : v.values)
      if (val.empty()) throw ParseError("empty value for '" + v.name + "'", lineno);
    vars.push_back(std::move(v));
  }
  try {
    return Schema(std::move(vars));
  } catch (const InputError& e) {
    throw ParseError(e.what());
  }
}

Schema read_schema_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  return read_schema(is);
}

// ---------------------------------------------------------------------------

ExampleSet read_example_set(std::istream& is, const Database& db) {
  const std::string text((std::istreambuf_iterator<char>(is)),
                         std::istreambuf_iterator<char>());
  std::istringstream probe(text);
  std::vector<std::string> first;
  std::size_t line = 0;
  while (read_record(probe, first, line) && blank_record(first)) {
  }
  const auto& schema = db.schema();
  bool is_csv = first.size() == schema.size() && !first.empty();
  if (is_csv)
    for (const auto& f : first)
      if (!schema.find(trim(f))) is_csv = false;

  ExampleSet out;
  if (is_csv) {
    std::istringstream csv(text);
    const Database subset = read_csv(csv, schema);
    for (const auto& row : subset.rows()) {
      const auto r = db.find(row);
      if (!r) throw InputError("example-set row is not in the database");
      out.push_back(*r);
    }
  } else {
    std::istringstream lines(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(lines, raw)) {
      ++lineno;
      const auto tok = trim(raw);
      if (tok.empty() || tok.front() == '#') continue;
      std::size_t r = 0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), r);
      if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw ParseError("malformed row index '" + std::string(tok) + "'", lineno);
      if (r >= db.size())
        throw InputError("row index " + std::to_string(r) + " outside database of " +
                         std::to_string(db.size()) + " rows");
      out.push_back(r);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ExampleSet read_example_set_file(const std::filesystem::path& path, const Database& db) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  return read_example_set(is, db);
}

void write_example_set(std::ostream& os, const ExampleSet& set) {
  for (std::size_t r : set) os << r << '\n';
}

void write_example_set_file(const std::filesystem::path& path, const ExampleSet& set) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  write_example_set(os, set);
}

ExampleSet sample_without_replacement(const ExampleSet& from, std::size_t count,
                                      Rng& rng) {
  if (count > from.size())
    throw InputError("cannot sample " + std::to_string(count) + " of " +
                     std::to_string(from.size()) + " examples");
  ExampleSet pool = from;
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

// ---------------------------------------------------------------------------

std::vector<double> log_likelihoods(const ProbCircuit& pc, const Database& db) {
  std::vector<double> out(db.size(), -std::numeric_limits<double>::infinity());
  if (pc.empty()) return out;
  if (pc.num_vars() > db.schema().num_bool())
    throw ScopeError("circuit scope exceeds the schema's boolean expansion");
  parallel_chunks(db.size(), 64, [&](std::size_t, std::size_t b, std::size_t e) {
    std::vector<double> scratch;
    for (std::size_t r = b; r < e; ++r) {
      log_evaluate_nodes(pc, db.bits(r), scratch);
      out[r] = scratch[pc.root()];
    }
  });
  return out;
}

ExampleSet compute_target_log(const ProbCircuit& pc, const Database& db, double log_t) {
  const auto ll = log_likelihoods(pc, db);
  ExampleSet out;
  for (std::size_t r = 0; r < ll.size(); ++r)
    if (ll[r] >= log_t) out.push_back(r);
  return out;
}

ExampleSet compute_target(const ProbCircuit& pc, const Database& db, double t) {
  if (!(t >= 0.0)) throw InputError("probability threshold must be nonnegative");
  return compute_target_log(pc, db,
                            t == 0.0 ? -std::numeric_limits<double>::infinity()
                                     : std::log(t));
}

}  // namespace putput
