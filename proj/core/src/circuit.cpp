#include <putput/circuit.hpp>
#include <putput/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace putput {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Iterative post-order DFS over every node (ascending start ids). Fails on a
// dangling reference or a cycle; `bad` then names the offending node.
template <typename ChildrenOf>
bool topo_sort(std::size_t n, ChildrenOf&& children_of,
               std::vector<NodeId>& order, NodeId& bad, bool& cyclic) {
  order.clear();
  order.reserve(n);
  std::vector<std::uint8_t> state(n, 0);  // 0 new, 1 on stack, 2 done
  std::vector<std::pair<NodeId, std::size_t>> stack;
  for (NodeId start = 0; start < n; ++start) {
    if (state[start] != 0) continue;
    stack.emplace_back(start, 0);
    state[start] = 1;
    while (!stack.empty()) {
      auto& [id, next] = stack.back();
      const auto& children = children_of(id);
      if (next < children.size()) {
        const NodeId c = children[next++];
        if (c >= n) {
          bad = id;
          cyclic = false;
          return false;
        }
        if (state[c] == 1) {
          bad = c;
          cyclic = true;
          return false;
        }
        if (state[c] == 0) {
          state[c] = 1;
          stack.emplace_back(c, 0);
        }
      } else {
        state[id] = 2;
        order.push_back(id);
        stack.pop_back();
      }
    }
  }
  return true;
}

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

void check_assignment(std::size_t num_vars, std::span<const std::uint8_t> x) {
  if (x.size() < num_vars)
    throw ScopeError("assignment covers " + std::to_string(x.size()) +
                     " boolean variables, circuit scope needs " +
                     std::to_string(num_vars));
}

void check_columns(std::size_t num_vars, const BooleanColumns& data) {
  if (data.columns.size() < num_vars)
    throw ScopeError("data has " + std::to_string(data.columns.size()) +
                     " boolean columns, circuit scope needs " +
                     std::to_string(num_vars));
}

std::string describe(const std::vector<Violation>& violations) {
  std::ostringstream os;
  os << violations.size() << " violation(s)";
  for (const auto& v : violations) os << "; node " << v.node << ": " << v.message;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

ProbCircuit::ProbCircuit(std::vector<PcNode> nodes, NodeId root)
    : nodes_(std::move(nodes)), root_(root) {
  if (nodes_.empty()) {
    root_ = 0;
    return;
  }
  for (const auto& n : nodes_) {
    if (n.kind == PcKind::Input) {
      num_vars_ = std::max<std::size_t>(num_vars_, n.literal.var + 1);
      continue;
    }
    if (n.children.empty()) well_formed_ = false;
    if (n.kind == PcKind::Sum) {
      if (n.weights.size() != n.children.size()) well_formed_ = false;
      for (double w : n.weights)
        if (!(w >= 0.0) || !std::isfinite(w)) well_formed_ = false;
    }
  }
  if (root_ >= nodes_.size()) well_formed_ = false;
  NodeId bad = 0;
  bool cyclic = false;
  if (!topo_sort(
          nodes_.size(),
          [this](NodeId id) -> const std::vector<NodeId>& {
            return nodes_[id].children;
          },
          topo_, bad, cyclic)) {
    topo_.clear();
    well_formed_ = false;
  }
}

std::size_t ProbCircuit::edge_count() const noexcept {
  std::size_t edges = 0;
  for (const auto& n : nodes_) edges += n.children.size();
  return edges;
}

void PcBuilder::check_children(const std::vector<NodeId>& children) const {
  if (children.empty()) throw ValidationError("inner node needs a child");
  for (NodeId c : children)
    if (c >= nodes_.size())
      throw ValidationError("child " + std::to_string(c) +
                            " referenced before it was created");
}

NodeId PcBuilder::input(Literal lit) {
  nodes_.push_back(PcNode{PcKind::Input, lit, {}, {}});
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId PcBuilder::product(std::vector<NodeId> children) {
  check_children(children);
  nodes_.push_back(PcNode{PcKind::Product, {}, std::move(children), {}});
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId PcBuilder::sum(std::vector<NodeId> children, std::vector<double> weights) {
  check_children(children);
  if (weights.size() != children.size())
    throw ValidationError("sum node needs one weight per child");
  nodes_.push_back(
      PcNode{PcKind::Sum, {}, std::move(children), std::move(weights)});
  return static_cast<NodeId>(nodes_.size() - 1);
}

ProbCircuit PcBuilder::build(NodeId root) && {
  if (root >= nodes_.size()) throw ValidationError("root id out of range");
  return ProbCircuit(std::move(nodes_), root);
}

LogicCircuit::LogicCircuit(std::vector<LcUnit> units, NodeId root)
    : units_(std::move(units)), root_(root) {
  if (units_.empty()) {
    root_ = 0;
    return;
  }
  for (const auto& u : units_) {
    if (u.kind == LcKind::Input)
      num_vars_ = std::max<std::size_t>(num_vars_, u.literal.var + 1);
    else if (u.children.empty())
      well_formed_ = false;
  }
  if (root_ >= units_.size()) well_formed_ = false;
  NodeId bad = 0;
  bool cyclic = false;
  if (!topo_sort(
          units_.size(),
          [this](NodeId id) -> const std::vector<NodeId>& {
            return units_[id].children;
          },
          topo_, bad, cyclic)) {
    topo_.clear();
    well_formed_ = false;
  }
}

// ---------------------------------------------------------------------------

std::string_view to_string(Property p) noexcept {
  switch (p) {
    case Property::BadRoot: return "root";
    case Property::DanglingChild: return "dangling-child";
    case Property::Cycle: return "cycle";
    case Property::ChildlessInner: return "childless-inner";
    case Property::WeightArity: return "weight-arity";
    case Property::NegativeWeight: return "negative-weight";
    case Property::Smoothness: return "smoothness";
    case Property::Decomposability: return "decomposability";
  }
  return "unknown";
}

namespace {

template <typename Nodes, typename IsInner>
bool check_graph(const Nodes& nodes, NodeId root, IsInner&& is_inner,
                 std::vector<Violation>& out) {
  if (nodes.empty()) return true;
  bool graph_ok = true;
  if (root >= nodes.size()) {
    out.push_back({root, Property::BadRoot, "root id out of range"});
    graph_ok = false;
  }
  for (NodeId id = 0; id < nodes.size(); ++id) {
    const auto& n = nodes[id];
    if (is_inner(n) && n.children.empty())
      out.push_back({id, Property::ChildlessInner, "inner node has no children"});
    for (NodeId c : n.children) {
      if (c >= nodes.size()) {
        out.push_back({id, Property::DanglingChild,
                       "child " + std::to_string(c) + " does not exist"});
        graph_ok = false;
      }
    }
  }
  if (!graph_ok) return false;
  std::vector<NodeId> order;
  NodeId bad = 0;
  bool cyclic = false;
  if (!topo_sort(
          nodes.size(),
          [&](NodeId id) -> const std::vector<NodeId>& { return nodes[id].children; },
          order, bad, cyclic)) {
    out.push_back({bad, Property::Cycle, "node is reachable from itself"});
    return false;
  }
  return true;
}

}  // namespace

std::vector<Violation> validate(const ProbCircuit& pc) {
  std::vector<Violation> out;
  const auto nodes = pc.nodes();
  const bool graph_ok = check_graph(
      nodes, pc.root(), [](const PcNode& n) { return n.kind != PcKind::Input; },
      out);
  for (NodeId id = 0; id < nodes.size(); ++id) {
    const auto& n = nodes[id];
    if (n.kind != PcKind::Sum) continue;
    if (n.weights.size() != n.children.size())
      out.push_back({id, Property::WeightArity,
                     std::to_string(n.weights.size()) + " weights for " +
                         std::to_string(n.children.size()) + " children"});
    for (double w : n.weights)
      if (!(w >= 0.0) || !std::isfinite(w)) {
        out.push_back({id, Property::NegativeWeight,
                       "weight must be finite and nonnegative"});
        break;
      }
  }
  if (!graph_ok) return out;

  const ScopeTable scopes(pc);
  for (NodeId id = 0; id < nodes.size(); ++id) {
    const auto& n = nodes[id];
    if (n.children.empty()) continue;
    if (n.kind == PcKind::Sum) {
      const auto& first = scopes[n.children.front()];
      for (NodeId c : n.children)
        if (scopes[c] != first) {
          out.push_back({id, Property::Smoothness,
                         "sum children have different scopes"});
          break;
        }
    } else if (n.kind == PcKind::Product) {
      boost::dynamic_bitset<> seen(scopes[id].size());
      for (NodeId c : n.children) {
        if (seen.intersects(scopes[c])) {
          out.push_back({id, Property::Decomposability,
                         "product children share a variable"});
          break;
        }
        seen |= scopes[c];
      }
    }
  }
  return out;
}

std::vector<Violation> validate(const LogicCircuit& lc) {
  std::vector<Violation> out;
  check_graph(lc.units(), lc.root(),
              [](const LcUnit& u) { return u.kind != LcKind::Input; }, out);
  return out;
}

void require_valid(const ProbCircuit& pc, Smoothness smoothness) {
  auto violations = validate(pc);
  if (smoothness == Smoothness::Optional)
    std::erase_if(violations, [](const Violation& v) {
      return v.property == Property::Smoothness;
    });
  if (!violations.empty()) throw ValidationError(describe(violations));
}

ScopeTable::ScopeTable(const ProbCircuit& pc) {
  if (!pc.topological_order().size() && !pc.empty())
    throw ValidationError("scope of a malformed circuit");
  const auto nodes = pc.nodes();
  scopes_.assign(nodes.size(), boost::dynamic_bitset<>(pc.num_vars()));
  for (NodeId id : pc.topological_order()) {
    const auto& n = nodes[id];
    if (n.kind == PcKind::Input) {
      scopes_[id].set(n.literal.var);
    } else {
      for (NodeId c : n.children) scopes_[id] |= scopes_[c];
    }
  }
}

std::vector<VarId> scope(const ProbCircuit& pc, NodeId id) {
  const ScopeTable table(pc);
  const auto& bits = table[id];
  std::vector<VarId> vars;
  for (auto v = bits.find_first(); v != boost::dynamic_bitset<>::npos;
       v = bits.find_next(v))
    vars.push_back(static_cast<VarId>(v));
  return vars;
}

// ---------------------------------------------------------------------------

void log_evaluate_nodes(const ProbCircuit& pc, std::span<const std::uint8_t> x,
                        std::vector<double>& out) {
  if (!pc.well_formed()) throw ValidationError("cannot evaluate a malformed circuit");
  check_assignment(pc.num_vars(), x);
  const auto nodes = pc.nodes();
  out.resize(nodes.size());
  for (NodeId id : pc.topological_order()) {
    const auto& n = nodes[id];
    switch (n.kind) {
      case PcKind::Input:
        out[id] = n.literal.holds(x) ? 0.0 : kNegInf;
        break;
      case PcKind::Product: {
        double acc = 0.0;
        for (NodeId c : n.children) {
          acc += out[c];
          if (acc == kNegInf) break;
        }
        out[id] = acc;
        break;
      }
      case PcKind::Sum: {
        double acc = kNegInf;
        for (std::size_t i = 0; i < n.children.size(); ++i) {
          const double w = n.weights[i];
          const double child = out[n.children[i]];
          if (w <= 0.0 || child == kNegInf) continue;
          acc = log_sum_exp(acc, std::log(w) + child);
        }
        out[id] = acc;
        break;
      }
    }
  }
}

double log_evaluate(const ProbCircuit& pc, std::span<const std::uint8_t> x) {
  if (pc.empty()) return kNegInf;
  std::vector<double> values;
  log_evaluate_nodes(pc, x, values);
  return values[pc.root()];
}

double evaluate(const ProbCircuit& pc, std::span<const std::uint8_t> x) {
  return std::exp(log_evaluate(pc, x));
}

bool evaluate(const LogicCircuit& lc, std::span<const std::uint8_t> x) {
  if (lc.empty()) return false;
  if (!lc.well_formed()) throw ValidationError("cannot evaluate a malformed circuit");
  check_assignment(lc.num_vars(), x);
  const auto units = lc.units();
  std::vector<std::uint8_t> value(units.size(), 0);
  for (NodeId id : lc.topological_order()) {
    const auto& u = units[id];
    switch (u.kind) {
      case LcKind::Input: value[id] = u.literal.holds(x); break;
      case LcKind::And:
        value[id] = std::all_of(u.children.begin(), u.children.end(),
                                [&](NodeId c) { return value[c] != 0; });
        break;
      case LcKind::Or:
        value[id] = std::any_of(u.children.begin(), u.children.end(),
                                [&](NodeId c) { return value[c] != 0; });
        break;
    }
  }
  return value[lc.root()] != 0;
}

namespace {

template <typename Circuit, typename Items, typename IsAnd, typename ChildUsed>
RowSet cover(const Circuit& circuit, const Items& items,
             const BooleanColumns& data, IsAnd&& is_and, ChildUsed&& used) {
  if (circuit.empty()) return RowSet(data.rows);
  if (!circuit.well_formed())
    throw ValidationError("cannot evaluate a malformed circuit");
  check_columns(circuit.num_vars(), data);
  std::vector<RowSet> value(items.size());
  for (NodeId id : circuit.topological_order()) {
    const auto& n = items[id];
    if (n.children.empty()) {
      value[id] = data.columns[n.literal.var];
      if (!n.literal.positive) value[id].flip();
      continue;
    }
    if (is_and(n)) {
      value[id] = RowSet(data.rows);
      value[id].set();
      for (NodeId c : n.children) value[id] &= value[c];
    } else {
      value[id] = RowSet(data.rows);
      for (std::size_t i = 0; i < n.children.size(); ++i)
        if (used(n, i)) value[id] |= value[n.children[i]];
    }
  }
  return value[circuit.root()];
}

}  // namespace

RowSet covered_rows(const ProbCircuit& pc, const BooleanColumns& data) {
  return cover(
      pc, pc.nodes(), data,
      [](const PcNode& n) { return n.kind == PcKind::Product; },
      [](const PcNode& n, std::size_t i) { return n.weights[i] > 0.0; });
}

RowSet covered_rows(const LogicCircuit& lc, const BooleanColumns& data) {
  return cover(
      lc, lc.units(), data, [](const LcUnit& u) { return u.kind == LcKind::And; },
      [](const LcUnit&, std::size_t) { return true; });
}

// ---------------------------------------------------------------------------

LogicCircuit to_logic(const ProbCircuit& pc) {
  if (pc.empty()) return {};
  if (!pc.well_formed()) throw ValidationError("cannot convert a malformed circuit");
  std::vector<LcUnit> units;
  units.reserve(pc.size());
  for (NodeId id = 0; id < pc.size(); ++id) {
    const auto& n = pc.node(id);
    switch (n.kind) {
      case PcKind::Input: units.push_back({LcKind::Input, n.literal, {}}); break;
      case PcKind::Product: units.push_back({LcKind::And, {}, n.children}); break;
      case PcKind::Sum:
        for (double w : n.weights)
          if (w == 0.0)
            throw ValidationError("node " + std::to_string(id) +
                                  " has a zero-weight edge; simplify first");
        units.push_back({LcKind::Or, {}, n.children});
        break;
    }
  }
  return LogicCircuit(std::move(units), pc.root());
}

namespace {

// `removed[id][i]` marks child edge i of node id as explicitly deleted.
ProbCircuit compact(const ProbCircuit& pc,
                    const std::vector<std::vector<bool>>* removed) {
  if (pc.empty()) return {};
  // Childless inner nodes are tolerated here; cycles and bad references are not.
  const auto nodes = pc.nodes();
  std::vector<NodeId> order;
  NodeId bad = 0;
  bool cyclic = false;
  if (pc.root() >= nodes.size() ||
      !topo_sort(
          nodes.size(),
          [&](NodeId id) -> const std::vector<NodeId>& { return nodes[id].children; },
          order, bad, cyclic))
    throw ValidationError("cannot simplify a cyclic or dangling circuit");

  auto kept = [&](NodeId id, std::size_t i) {
    if (removed && (*removed)[id].size() > i && (*removed)[id][i]) return false;
    const auto& n = nodes[id];
    if (n.kind == PcKind::Sum)
      return i < n.weights.size() && n.weights[i] > 0.0;
    return true;
  };

  std::vector<std::uint8_t> alive(nodes.size(), 0);
  for (NodeId id : order) {
    const auto& n = nodes[id];
    if (n.kind == PcKind::Input) {
      alive[id] = 1;
      continue;
    }
    std::size_t live_children = 0;
    bool lost_child = false;
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      if (!kept(id, i)) continue;
      if (alive[n.children[i]])
        ++live_children;
      else
        lost_child = true;
    }
    alive[id] = n.kind == PcKind::Sum ? live_children > 0
                                      : live_children > 0 && !lost_child;
  }
  if (!alive[pc.root()]) return {};

  std::vector<std::uint8_t> reachable(nodes.size(), 0);
  std::vector<NodeId> stack{pc.root()};
  reachable[pc.root()] = 1;
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    const auto& n = nodes[id];
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      const NodeId c = n.children[i];
      if (kept(id, i) && alive[c] && !reachable[c]) {
        reachable[c] = 1;
        stack.push_back(c);
      }
    }
  }

  std::vector<NodeId> remap(nodes.size(), 0);
  std::vector<PcNode> out;
  for (NodeId id : order) {
    if (!reachable[id]) continue;
    remap[id] = static_cast<NodeId>(out.size());
    const auto& n = nodes[id];
    PcNode copy{n.kind, n.literal, {}, {}};
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      if (!kept(id, i) || !alive[n.children[i]]) continue;
      copy.children.push_back(remap[n.children[i]]);
      if (n.kind == PcKind::Sum) copy.weights.push_back(n.weights[i]);
    }
    out.push_back(std::move(copy));
  }
  return ProbCircuit(std::move(out), remap[pc.root()]);
}

}  // namespace

ProbCircuit simplify(const ProbCircuit& pc) { return compact(pc, nullptr); }

ProbCircuit remove_edges(const ProbCircuit& pc, std::span<const EdgeRef> edges) {
  if (pc.empty()) return {};
  std::vector<std::vector<bool>> removed(pc.size());
  for (const auto& e : edges) {
    if (e.node >= pc.size() || e.position >= pc.node(e.node).children.size())
      throw ValidationError("edge (" + std::to_string(e.node) + "," +
                            std::to_string(e.position) + ") does not exist");
    auto& marks = removed[e.node];
    marks.resize(pc.node(e.node).children.size(), false);
    marks[e.position] = true;
  }
  return compact(pc, &removed);
}

std::string to_formula(const LogicCircuit& lc,
                       const std::function<std::string(VarId)>& name) {
  if (lc.empty()) return "⊥";
  if (!lc.well_formed()) throw ValidationError("cannot render a malformed circuit");
  const auto units = lc.units();
  std::vector<std::string> text(units.size());
  std::vector<char> atomic(units.size(), 0);
  for (NodeId id : lc.topological_order()) {
    const auto& u = units[id];
    if (u.kind == LcKind::Input) {
      text[id] = (u.literal.positive ? "" : "-") + name(u.literal.var);
      atomic[id] = 1;
      continue;
    }
    if (u.children.size() == 1) {
      text[id] = text[u.children[0]];
      atomic[id] = atomic[u.children[0]];
      continue;
    }
    const char* op = u.kind == LcKind::And ? "∧" : "∨";
    std::string s;
    for (std::size_t i = 0; i < u.children.size(); ++i) {
      if (i) s += op;
      const NodeId c = u.children[i];
      s += atomic[c] ? text[c] : "(" + text[c] + ")";
    }
    text[id] = std::move(s);
  }
  return text[lc.root()];
}

}  // namespace putput
