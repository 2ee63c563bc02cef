#pragma once

#include <putput/circuit.hpp>
#include <putput/data.hpp>

#include <boost/dynamic_bitset.hpp>

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace putput {

// Allowed values of one multi-valued variable, indexed like Variable::values.
using ValueSet = boost::dynamic_bitset<>;

// `variable ∈ values`.
struct Atom {
  std::size_t variable = 0;
  ValueSet values;

  friend bool operator==(const Atom&, const Atom&) = default;
};

// Disjunction of atoms, at most one per variable, sorted by variable. A
// clause with no atoms is false.
class Clause {
 public:
  Clause() = default;

  std::span<const Atom> atoms() const noexcept { return atoms_; }
  bool empty() const noexcept { return atoms_.empty(); }
  const ValueSet* find(std::size_t variable) const;

  // Unions `values` into the atom for `variable`. Empty sets are ignored.
  void add(std::size_t variable, const ValueSet& values);
  // Union of two clauses.
  void merge(const Clause& other);
  // Replaces the atom for `variable` (erases it when `values` is empty).
  void set(std::size_t variable, ValueSet values);

  bool satisfied_by(const Example& e) const;
  // Some atom allows every value of its variable.
  bool tautological(const Schema& schema) const;
  // Every model of *this is a model of `other`: each atom here is contained in
  // the same variable's atom in `other`.
  bool subsumes(const Clause& other) const;

  friend bool operator==(const Clause&, const Clause&) = default;
  friend bool operator<(const Clause& a, const Clause& b);

 private:
  std::vector<Atom> atoms_;
};

// Conjunction of clauses over a schema's multi-valued variables. No clauses
// means true; a single empty clause means false.
class Cnf {
 public:
  Cnf() = default;
  explicit Cnf(std::vector<Clause> clauses) : clauses_(std::move(clauses)) {}
  static Cnf falsity() { return Cnf({Clause{}}); }

  std::span<const Clause> clauses() const noexcept { return clauses_; }
  std::size_t size() const noexcept { return clauses_.size(); }
  bool is_true() const noexcept { return clauses_.empty(); }
  bool is_false() const noexcept;

  bool satisfied_by(const Example& e) const;

  friend bool operator==(const Cnf&, const Cnf&) = default;

 private:
  std::vector<Clause> clauses_;
};

inline constexpr std::size_t kDefaultClauseBudget = 10'000;

// Converts a logical circuit over the schema's one-hot booleans to a CNF over
// the multi-valued variables. x_i becomes X ∈ {i}, ¬x_i becomes X ∈ V(X)∖{i};
// same-variable atoms merge by union inside a clause and unit clauses on the
// same variable intersect. Tautological and subsumed clauses are dropped.
// Equivalent to the circuit on every schema-valid assignment. Throws
// BudgetError when an intermediate CNF exceeds `clause_budget` clauses.
Cnf extract_cnf(const LogicCircuit& lc, const Schema& schema,
                std::size_t clause_budget = kDefaultClauseBudget);

// Canonical form of an arbitrary clause list (same simplifications as above).
Cnf normalize(std::vector<Clause> clauses, const Schema& schema);

// -(k/|X|) log2(k/|X|) with k the number of values of X the clause allows
// (0 when X is absent). Both k = 0 and k = |X| give 0.
double clause_entropy(const Clause& c, std::size_t variable, const Schema& schema);

// Sum of clause_entropy over every schema variable.
double clause_incomprehensibility(const Clause& c, const Schema& schema);

// Sum over clauses of the clause's own incomprehensibility plus that of every
// other clause sharing at least one variable with it.
double incomprehensibility(const Cnf& cnf, const Schema& schema);

enum class QueryDialect : std::uint8_t { Human, SqlWhere };

// Readable query text. Clauses join with AND, atoms with OR. Each atom uses
// whichever of the positive (`=`, `IN`) or complement (`!=`, `NOT IN`) forms
// lists fewer values. Deterministic: schema order for variables and values.
std::string emit_query(const Cnf& cnf, const Schema& schema, QueryDialect dialect);

// theory.cnf:
//   putput-cnf v1
//   schema <path>
//   <var>∈{<v>,<v>} | <var>∈{<v>}     (one clause per line)
// A false theory is a single `⊥` clause line. '\' escapes '\', ',', '{', '}'
// and '|' inside names and values.
void write_cnf(std::ostream& os, const Cnf& cnf, const Schema& schema,
               const std::string& schema_ref);
void write_cnf_file(const std::filesystem::path& path, const Cnf& cnf,
                    const Schema& schema, const std::string& schema_ref);

struct CnfFile {
  Cnf cnf;
  std::string schema_ref;
};
CnfFile read_cnf(std::istream& is, const Schema& schema);
CnfFile read_cnf_file(const std::filesystem::path& path, const Schema& schema);

}  // namespace putput
