#include <putput/comprehensibility.hpp>
#include <putput/errors.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace putput {
namespace {

std::vector<std::size_t> members(const ValueSet& s) {
  std::vector<std::size_t> out;
  for (auto i = s.find_first(); i != ValueSet::npos; i = s.find_next(i)) out.push_back(i);
  return out;
}

boost::dynamic_bitset<> variable_mask(const Clause& c, std::size_t vars) {
  boost::dynamic_bitset<> m(vars);
  for (const auto& a : c.atoms()) m.set(a.variable);
  return m;
}

bool clause_less(const Clause& a, const Clause& b) {
  if (a.atoms().size() != b.atoms().size()) return a.atoms().size() < b.atoms().size();
  return a < b;
}

}  // namespace

const ValueSet* Clause::find(std::size_t variable) const {
  const auto it = std::lower_bound(
      atoms_.begin(), atoms_.end(), variable,
      [](const Atom& a, std::size_t v) { return a.variable < v; });
  if (it == atoms_.end() || it->variable != variable) return nullptr;
  return &it->values;
}

void Clause::add(std::size_t variable, const ValueSet& values) {
  if (values.none()) return;
  auto it = std::lower_bound(
      atoms_.begin(), atoms_.end(), variable,
      [](const Atom& a, std::size_t v) { return a.variable < v; });
  if (it != atoms_.end() && it->variable == variable)
    it->values |= values;
  else
    atoms_.insert(it, Atom{variable, values});
}

void Clause::merge(const Clause& other) {
  for (const auto& a : other.atoms_) add(a.variable, a.values);
}

void Clause::set(std::size_t variable, ValueSet values) {
  auto it = std::lower_bound(
      atoms_.begin(), atoms_.end(), variable,
      [](const Atom& a, std::size_t v) { return a.variable < v; });
  const bool present = it != atoms_.end() && it->variable == variable;
  if (values.none()) {
    if (present) atoms_.erase(it);
  } else if (present) {
    it->values = std::move(values);
  } else {
    atoms_.insert(it, Atom{variable, std::move(values)});
  }
}

bool Clause::satisfied_by(const Example& e) const {
  return std::any_of(atoms_.begin(), atoms_.end(), [&](const Atom& a) {
    return a.values.test(e.at(a.variable));
  });
}

bool Clause::tautological(const Schema& schema) const {
  return std::any_of(atoms_.begin(), atoms_.end(), [&](const Atom& a) {
    return a.values.count() == schema.cardinality(a.variable);
  });
}

bool Clause::subsumes(const Clause& other) const {
  for (const auto& a : atoms_) {
    const ValueSet* o = other.find(a.variable);
    if (!o || !a.values.is_subset_of(*o)) return false;
  }
  return true;
}

bool operator<(const Clause& a, const Clause& b) {
  const std::size_t n = std::min(a.atoms_.size(), b.atoms_.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& x = a.atoms_[i];
    const auto& y = b.atoms_[i];
    if (x.variable != y.variable) return x.variable < y.variable;
    if (x.values != y.values) return members(x.values) < members(y.values);
  }
  return a.atoms_.size() < b.atoms_.size();
}

bool Cnf::is_false() const noexcept {
  return std::any_of(clauses_.begin(), clauses_.end(),
                     [](const Clause& c) { return c.empty(); });
}

bool Cnf::satisfied_by(const Example& e) const {
  return std::all_of(clauses_.begin(), clauses_.end(),
                     [&](const Clause& c) { return c.satisfied_by(e); });
}

// ---------------------------------------------------------------------------

Cnf normalize(std::vector<Clause> clauses, const Schema& schema) {
  for (const auto& c : clauses)
    if (c.empty()) return Cnf::falsity();
  std::erase_if(clauses, [&](const Clause& c) { return c.tautological(schema); });

  // Unit propagation over multi-valued atoms: unit clauses on one variable
  // intersect, and restrict that variable's atoms in every other clause.
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<std::size_t, ValueSet> units;
    for (const auto& c : clauses) {
      if (c.atoms().size() != 1) continue;
      const auto& a = c.atoms().front();
      auto [it, fresh] = units.emplace(a.variable, a.values);
      if (!fresh) it->second &= a.values;
      if (it->second.none()) return Cnf::falsity();
    }
    std::vector<Clause> next;
    next.reserve(clauses.size());
    for (const auto& [var, values] : units) {
      Clause u;
      u.add(var, values);
      next.push_back(std::move(u));
    }
    for (auto& c : clauses) {
      if (c.atoms().size() == 1) continue;
      bool satisfied = false;
      Clause restricted = c;
      for (const auto& a : c.atoms()) {
        const auto u = units.find(a.variable);
        if (u == units.end()) continue;
        if (u->second.is_subset_of(a.values)) {
          satisfied = true;
          break;
        }
        restricted.set(a.variable, a.values & u->second);
      }
      if (satisfied) continue;
      if (restricted.empty()) return Cnf::falsity();
      if (restricted.atoms().size() == 1) changed = true;
      next.push_back(std::move(restricted));
    }
    clauses = std::move(next);
  }

  std::sort(clauses.begin(), clauses.end(), clause_less);
  clauses.erase(std::unique(clauses.begin(), clauses.end()), clauses.end());
  std::vector<Clause> kept;
  std::vector<boost::dynamic_bitset<>> masks;
  for (auto& c : clauses) {
    const auto mask = variable_mask(c, schema.size());
    bool subsumed = false;
    for (std::size_t k = 0; k < kept.size() && !subsumed; ++k)
      subsumed = masks[k].is_subset_of(mask) && kept[k].subsumes(c);
    if (subsumed) continue;
    kept.push_back(std::move(c));
    masks.push_back(mask);
  }
  return Cnf(std::move(kept));
}

namespace {

Cnf literal_cnf(Literal lit, const Schema& schema) {
  if (lit.var >= schema.num_bool())
    throw ScopeError("circuit literal " + std::to_string(lit.var) +
                     " outside the schema's boolean expansion");
  const auto [a, i] = schema.decode(lit.var);
  ValueSet values(schema.cardinality(a));
  if (lit.positive) {
    values.set(i);
  } else {
    values.set();
    values.reset(i);
  }
  if (values.none()) return Cnf::falsity();
  Clause c;
  c.add(a, values);
  return normalize({c}, schema);
}

Cnf conjoin(const std::vector<const Cnf*>& parts, const Schema& schema,
            std::size_t budget) {
  std::vector<Clause> all;
  for (const Cnf* p : parts) {
    if (p->is_false()) return Cnf::falsity();
    all.insert(all.end(), p->clauses().begin(), p->clauses().end());
    if (all.size() > budget)
      throw BudgetError("CNF exceeds the clause budget of " + std::to_string(budget) +
                        "; prune the circuit further first");
  }
  return normalize(std::move(all), schema);
}

Cnf disjoin(const Cnf& a, const Cnf& b, const Schema& schema, std::size_t budget) {
  if (a.is_true() || b.is_true()) return Cnf{};
  if (a.is_false()) return b;
  if (b.is_false()) return a;
  std::vector<Clause> out;
  for (const auto& x : a.clauses())
    for (const auto& y : b.clauses()) {
      Clause c = x;
      c.merge(y);
      if (c.tautological(schema)) continue;
      out.push_back(std::move(c));
      if (out.size() > budget)
        throw BudgetError("CNF exceeds the clause budget of " + std::to_string(budget) +
                          "; prune the circuit further first");
    }
  return normalize(std::move(out), schema);
}

}  // namespace

Cnf extract_cnf(const LogicCircuit& lc, const Schema& schema, std::size_t clause_budget) {
  if (lc.empty()) return Cnf::falsity();
  if (!lc.well_formed()) throw ValidationError("cannot extract a malformed circuit");
  const auto units = lc.units();
  std::vector<Cnf> cnf(units.size());
  for (NodeId id : lc.topological_order()) {
    const auto& u = units[id];
    switch (u.kind) {
      case LcKind::Input: cnf[id] = literal_cnf(u.literal, schema); break;
      case LcKind::And: {
        std::vector<const Cnf*> parts;
        for (NodeId c : u.children) parts.push_back(&cnf[c]);
        cnf[id] = conjoin(parts, schema, clause_budget);
        break;
      }
      case LcKind::Or: {
        Cnf acc = Cnf::falsity();
        for (NodeId c : u.children) acc = disjoin(acc, cnf[c], schema, clause_budget);
        cnf[id] = std::move(acc);
        break;
      }
    }
  }
  return cnf[lc.root()];
}

// ---------------------------------------------------------------------------

double clause_entropy(const Clause& c, std::size_t variable, const Schema& schema) {
  const ValueSet* values = c.find(variable);
  if (!values) return 0.0;
  const double k = static_cast<double>(values->count());
  const double n = static_cast<double>(schema.cardinality(variable));
  if (k == 0.0 || k == n) return 0.0;
  const double p = k / n;
  return -p * std::log2(p);
}

double clause_incomprehensibility(const Clause& c, const Schema& schema) {
  double total = 0.0;
  // Variables absent from the clause contribute 0.
  for (const auto& a : c.atoms()) total += clause_entropy(c, a.variable, schema);
  return total;
}

double incomprehensibility(const Cnf& cnf, const Schema& schema) {
  const auto clauses = cnf.clauses();
  const std::size_t n = clauses.size();
  std::vector<double> upsilon(n);
  for (std::size_t i = 0; i < n; ++i)
    upsilon[i] = clause_incomprehensibility(clauses[i], schema);

  std::vector<std::vector<std::size_t>> by_var(schema.size());
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& a : clauses[i].atoms()) by_var[a.variable].push_back(i);

  double total = 0.0;
  std::vector<std::size_t> stamp(n, SIZE_MAX);
  for (std::size_t i = 0; i < n; ++i) {
    total += upsilon[i];
    stamp[i] = i;
    for (const auto& a : clauses[i].atoms())
      for (std::size_t k : by_var[a.variable]) {
        if (stamp[k] == i) continue;
        stamp[k] = i;
        total += upsilon[k];
      }
  }
  return total;
}

// ---------------------------------------------------------------------------

namespace {

std::string sql_string(const std::string& v) {
  std::string out = "'";
  for (char c : v) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

std::string sql_ident(const std::string& v) {
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string render_atom(const Atom& a, const Schema& schema, QueryDialect dialect) {
  const auto& var = schema.variable(a.variable);
  const std::size_t k = a.values.count();
  const bool complement = var.values.size() - k < k;
  std::vector<std::string> listed;
  for (std::size_t i = 0; i < var.values.size(); ++i)
    if (a.values.test(i) != complement) listed.push_back(var.values[i]);

  const bool sql = dialect == QueryDialect::SqlWhere;
  std::string out = sql ? sql_ident(var.name) : var.name;
  if (listed.size() == 1) {
    out += complement ? (sql ? " <> " : " != ") : " = ";
    out += sql ? sql_string(listed.front()) : listed.front();
    return out;
  }
  out += complement ? " NOT IN " : " IN ";
  out += sql ? "(" : "{";
  for (std::size_t i = 0; i < listed.size(); ++i) {
    if (i) out += ", ";
    out += sql ? sql_string(listed[i]) : listed[i];
  }
  out += sql ? ")" : "}";
  return out;
}

}  // namespace

std::string emit_query(const Cnf& cnf, const Schema& schema, QueryDialect dialect) {
  const bool sql = dialect == QueryDialect::SqlWhere;
  if (cnf.is_false()) return sql ? "1 = 0" : "FALSE";
  if (cnf.is_true()) return sql ? "1 = 1" : "TRUE";
  std::string out;
  const auto clauses = cnf.clauses();
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    if (i) out += " AND ";
    const auto atoms = clauses[i].atoms();
    const bool wrap = atoms.size() > 1 && (sql || clauses.size() > 1);
    if (wrap) out += "(";
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      if (j) out += " OR ";
      out += render_atom(atoms[j], schema, dialect);
    }
    if (wrap) out += ")";
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kCnfHeader = "putput-cnf v1";
constexpr std::string_view kElem = "∈";

std::string escape_token(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '\\' || c == ',' || c == '{' || c == '}' || c == '|') out += '\\';
    out += c;
  }
  return out;
}

// Reads up to an unescaped character in `stops`; unescapes on the way.
std::string read_token(std::string_view line, std::size_t& pos, std::string_view stops,
                       std::size_t lineno) {
  std::string out;
  while (pos < line.size()) {
    const char c = line[pos];
    if (c == '\\') {
      if (pos + 1 >= line.size()) throw ParseError("dangling escape", lineno);
      out += line[pos + 1];
      pos += 2;
      continue;
    }
    if (stops.find(c) != std::string_view::npos) break;
    out += c;
    ++pos;
  }
  return out;
}

std::string_view strip(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

Clause parse_clause(std::string_view line, const Schema& schema, std::size_t lineno) {
  Clause clause;
  std::size_t pos = 0;
  while (true) {
    while (pos < line.size() && line[pos] == ' ') ++pos;
    std::string name = read_token(line, pos, "{", lineno);
    if (pos >= line.size()) throw ParseError("expected '<var>∈{...}'", lineno);
    if (name.size() < kElem.size() ||
        name.compare(name.size() - kElem.size(), kElem.size(), kElem) != 0)
      throw ParseError("expected '∈' before '{'", lineno);
    name.resize(name.size() - kElem.size());
    const std::string var_name(strip(name));
    const auto var = schema.find(var_name);
    if (!var) throw ParseError("unknown variable '" + var_name + "'", lineno);
    ++pos;  // '{'
    ValueSet values(schema.cardinality(*var));
    while (true) {
      const std::string value(strip(read_token(line, pos, ",}", lineno)));
      if (pos >= line.size()) throw ParseError("unterminated value set", lineno);
      const auto idx = schema.value_index(*var, value);
      if (!idx)
        throw ParseError("value '" + value + "' not in variable '" + var_name + "'",
                         lineno);
      values.set(*idx);
      if (line[pos++] == '}') break;
    }
    clause.add(*var, values);
    while (pos < line.size() && line[pos] == ' ') ++pos;
    if (pos >= line.size()) break;
    if (line[pos] != '|') throw ParseError("expected ' | ' between atoms", lineno);
    ++pos;
  }
  return clause;
}

}  // namespace

void write_cnf(std::ostream& os, const Cnf& cnf, const Schema& schema,
               const std::string& schema_ref) {
  os << kCnfHeader << '\n' << "schema " << schema_ref << '\n';
  for (const auto& c : cnf.clauses()) {
    if (c.empty()) {
      os << "⊥\n";
      continue;
    }
    const auto atoms = c.atoms();
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      if (j) os << " | ";
      const auto& var = schema.variable(atoms[j].variable);
      os << escape_token(var.name) << kElem << '{';
      bool first = true;
      for (std::size_t i = 0; i < var.values.size(); ++i) {
        if (!atoms[j].values.test(i)) continue;
        if (!first) os << ',';
        first = false;
        os << escape_token(var.values[i]);
      }
      os << '}';
    }
    os << '\n';
  }
}

void write_cnf_file(const std::filesystem::path& path, const Cnf& cnf,
                    const Schema& schema, const std::string& schema_ref) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  write_cnf(os, cnf, schema, schema_ref);
}

CnfFile read_cnf(std::istream& is, const Schema& schema) {
  CnfFile out;
  std::vector<Clause> clauses;
  std::string raw;
  std::size_t lineno = 0;
  bool header = false;
  bool schema_line = false;
  while (std::getline(is, raw)) {
    ++lineno;
    const auto line = strip(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != kCnfHeader) throw ParseError("expected header 'putput-cnf v1'", lineno);
      header = true;
      continue;
    }
    if (!schema_line) {
      if (line.substr(0, 7) != "schema ") throw ParseError("expected 'schema <path>'", lineno);
      out.schema_ref = std::string(strip(line.substr(7)));
      schema_line = true;
      continue;
    }
    if (line == "⊥") {
      clauses.emplace_back();
      continue;
    }
    clauses.push_back(parse_clause(line, schema, lineno));
  }
  if (!header) throw ParseError("missing header 'putput-cnf v1'");
  if (!schema_line) throw ParseError("missing 'schema <path>' line");
  out.cnf = Cnf(std::move(clauses));
  return out;
}

CnfFile read_cnf_file(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  return read_cnf(is, schema);
}

}  // namespace putput
