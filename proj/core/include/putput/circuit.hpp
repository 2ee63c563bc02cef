#pragma once

#include <putput/bits.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace putput {

using NodeId = std::uint32_t;
using VarId = std::uint32_t;

// A boolean variable or its negation. As an input distribution it is the
// indicator f(x) in {0,1} with f(x) + f(-x) = 1.
struct Literal {
  VarId var = 0;
  bool positive = true;

  bool holds(std::span<const std::uint8_t> x) const {
    return (x[var] != 0) == positive;
  }
  Literal negated() const { return {var, !positive}; }

  friend bool operator==(const Literal&, const Literal&) = default;
};

// Identifies the `position`-th child edge of inner node `node`.
struct EdgeRef {
  NodeId node = 0;
  std::uint32_t position = 0;

  friend auto operator<=>(const EdgeRef&, const EdgeRef&) = default;
};

// ---------------------------------------------------------------------------
// Probabilistic circuit
// ---------------------------------------------------------------------------

enum class PcKind : std::uint8_t { Input, Sum, Product };

struct PcNode {
  PcKind kind = PcKind::Input;
  Literal literal{};
  std::vector<NodeId> children;
  std::vector<double> weights;  // Sum nodes only; parallel to children
};

// Immutable DAG of input/sum/product nodes. A default-constructed circuit is
// the empty circuit: it assigns probability 0 to everything and its logical
// theory is false.
//
// The arena may be malformed (cycles, dangling child ids) so that validate()
// can report on it; such circuits refuse to evaluate.
class ProbCircuit {
 public:
  ProbCircuit() = default;
  ProbCircuit(std::vector<PcNode> nodes, NodeId root);

  bool empty() const noexcept { return nodes_.empty(); }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept;
  NodeId root() const noexcept { return root_; }
  const PcNode& node(NodeId id) const { return nodes_.at(id); }
  std::span<const PcNode> nodes() const noexcept { return nodes_; }

  // Children before parents. Only meaningful when well_formed().
  std::span<const NodeId> topological_order() const noexcept { return topo_; }
  // Root and child ids in range, acyclic, inner nodes have children, sum
  // weights match their children and are finite and nonnegative. Smoothness
  // and decomposability are checked by validate() only.
  bool well_formed() const noexcept { return well_formed_; }
  // One past the largest boolean variable id referenced by an input node.
  std::size_t num_vars() const noexcept { return num_vars_; }

 private:
  std::vector<PcNode> nodes_;
  NodeId root_ = 0;
  std::vector<NodeId> topo_;
  bool well_formed_ = true;
  std::size_t num_vars_ = 0;
};

// Appends nodes in children-first order; ids are dense and a node can only
// reference nodes created before it, so built circuits are acyclic.
class PcBuilder {
 public:
  NodeId input(Literal lit);
  NodeId input(VarId var, bool positive) { return input(Literal{var, positive}); }
  NodeId product(std::vector<NodeId> children);
  NodeId sum(std::vector<NodeId> children, std::vector<double> weights);

  std::size_t size() const noexcept { return nodes_.size(); }
  ProbCircuit build(NodeId root) &&;

 private:
  void check_children(const std::vector<NodeId>& children) const;
  std::vector<PcNode> nodes_;
};

// ---------------------------------------------------------------------------
// Logical circuit
// ---------------------------------------------------------------------------

enum class LcKind : std::uint8_t { Input, And, Or };

struct LcUnit {
  LcKind kind = LcKind::Input;
  Literal literal{};
  std::vector<NodeId> children;
};

// Immutable DAG of input/AND/OR units. Default-constructed = constant false.
class LogicCircuit {
 public:
  LogicCircuit() = default;
  LogicCircuit(std::vector<LcUnit> units, NodeId root);

  bool empty() const noexcept { return units_.empty(); }
  std::size_t size() const noexcept { return units_.size(); }
  NodeId root() const noexcept { return root_; }
  const LcUnit& unit(NodeId id) const { return units_.at(id); }
  std::span<const LcUnit> units() const noexcept { return units_; }
  std::span<const NodeId> topological_order() const noexcept { return topo_; }
  bool well_formed() const noexcept { return well_formed_; }
  std::size_t num_vars() const noexcept { return num_vars_; }

 private:
  std::vector<LcUnit> units_;
  NodeId root_ = 0;
  std::vector<NodeId> topo_;
  bool well_formed_ = true;
  std::size_t num_vars_ = 0;
};

// ---------------------------------------------------------------------------
// Validation and scopes
// ---------------------------------------------------------------------------

enum class Property : std::uint8_t {
  BadRoot,
  DanglingChild,
  Cycle,
  ChildlessInner,
  WeightArity,
  NegativeWeight,
  Smoothness,
  Decomposability,
};

std::string_view to_string(Property p) noexcept;

struct Violation {
  NodeId node = 0;
  Property property = Property::BadRoot;
  std::string message;
};

std::vector<Violation> validate(const ProbCircuit& pc);
std::vector<Violation> validate(const LogicCircuit& lc);

enum class Smoothness : std::uint8_t { Required, Optional };

// Throws ValidationError listing the violations. With Smoothness::Optional
// the smoothness property is not enforced: input-node pruning drops literals
// from products and generally leaves parent sums non-smooth.
void require_valid(const ProbCircuit& pc,
                   Smoothness smoothness = Smoothness::Required);

// Variable-set of every node, as bitsets over boolean variable ids.
class ScopeTable {
 public:
  explicit ScopeTable(const ProbCircuit& pc);

  const boost::dynamic_bitset<>& operator[](NodeId id) const {
    return scopes_.at(id);
  }

 private:
  std::vector<boost::dynamic_bitset<>> scopes_;
};

// Sorted boolean variable ids node `id` depends on.
std::vector<VarId> scope(const ProbCircuit& pc, NodeId id);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

// log p_root(x). Returns -infinity exactly when p_root(x) = 0.
double log_evaluate(const ProbCircuit& pc, std::span<const std::uint8_t> x);

// p_root(x) in linear space (may underflow to 0 for long scopes; use
// log_evaluate when that matters).
double evaluate(const ProbCircuit& pc, std::span<const std::uint8_t> x);

// Per-node log values for one assignment, indexed by node id. `out` is resized.
void log_evaluate_nodes(const ProbCircuit& pc, std::span<const std::uint8_t> x,
                        std::vector<double>& out);

bool evaluate(const LogicCircuit& lc, std::span<const std::uint8_t> x);

// Rows with p(x) > 0, computed word-parallel through the circuit's logical
// shadow. Zero-weight edges count as absent, so the result equals
// {r : evaluate(pc, row r) > 0} for every well-formed circuit.
RowSet covered_rows(const ProbCircuit& pc, const BooleanColumns& data);
RowSet covered_rows(const LogicCircuit& lc, const BooleanColumns& data);

// ---------------------------------------------------------------------------
// Transformations
// ---------------------------------------------------------------------------

// Sum -> OR, Product -> AND, Input -> Input; ids and child order preserved.
// Requires every sum weight to be nonzero (run simplify first).
LogicCircuit to_logic(const ProbCircuit& pc);

// Structural cleanup: drops zero-weight sum edges and childless inner nodes,
// removes products that lost a child that died, removes nodes unreachable from
// the root, and renumbers the survivors densely in children-first order.
// Returns the empty circuit when the root dies.
ProbCircuit simplify(const ProbCircuit& pc);

// Removes the given edges and simplifies. Removing a product edge drops that
// factor from the product (the product no longer depends on the child); a
// product left with no children at all dies like a childless sum.
ProbCircuit remove_edges(const ProbCircuit& pc, std::span<const EdgeRef> edges);

// Renders the circuit as a formula: AND as "∧", OR as "∨", negation as "-".
// Operands with more than one child are parenthesised and single-child units
// print as their child. `name` maps a boolean variable id to text.
std::string to_formula(const LogicCircuit& lc,
                       const std::function<std::string(VarId)>& name);

}  // namespace putput
