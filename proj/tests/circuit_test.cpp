#include "running_example.hpp"
#include "oracles.hpp"

#include <putput/circuit.hpp>
#include <putput/errors.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace putput;
using putput::testing::all_assignments;
using putput::testing::brute_probability;
using putput::testing::brute_satisfied;
using putput::testing::random_circuit;

namespace {

BooleanColumns columns_of(const std::vector<std::vector<std::uint8_t>>& rows, std::size_t n) {
  BooleanColumns cols;
  cols.rows = rows.size();
  cols.columns.assign(n, RowSet(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t v = 0; v < n; ++v)
      if (rows[r][v]) cols.columns[v].set(r);
  return cols;
}

bool has(const std::vector<Violation>& vs, Property p) {
  for (const auto& v : vs)
    if (v.property == p) return true;
  return false;
}

// x0 ∧ (x1 ∨ ¬x1) with weights 0.25 / 0.75.
ProbCircuit small() {
  PcBuilder b;
  const NodeId x0 = b.input(0, true);
  const NodeId s = b.sum({b.input(1, true), b.input(1, false)}, {0.25, 0.75});
  return std::move(b).build(b.product({x0, s}));
}

}  // namespace

TEST(Builder, RejectsMalformedNodes) {
  PcBuilder b;
  const NodeId x = b.input(0, true);
  EXPECT_THROW(b.product({}), ValidationError);
  EXPECT_THROW(b.product({x + 1}), ValidationError);
  EXPECT_THROW(b.sum({x}, {0.5, 0.5}), ValidationError);
  EXPECT_THROW(std::move(b).build(7), ValidationError);
}

TEST(Validate, AcceptsSmallCircuit) {
  EXPECT_TRUE(validate(small()).empty());
  EXPECT_NO_THROW(require_valid(small()));
}

TEST(Validate, ReportsEachProperty) {
  const auto in = [](VarId v, bool pos) {
    PcNode n;
    n.literal = {v, pos};
    return n;
  };
  const auto inner = [](PcKind k, std::vector<NodeId> ch, std::vector<double> w = {}) {
    PcNode n;
    n.kind = k;
    n.children = std::move(ch);
    n.weights = std::move(w);
    return n;
  };

  // Sum over different scopes: not smooth.
  EXPECT_TRUE(has(validate(ProbCircuit({in(0, true), in(1, true),
                                        inner(PcKind::Sum, {0, 1}, {1, 1})},
                                       2)),
                  Property::Smoothness));
  // Product over overlapping scopes: not decomposable.
  EXPECT_TRUE(has(validate(ProbCircuit({in(0, true), in(0, false),
                                        inner(PcKind::Product, {0, 1})},
                                       2)),
                  Property::Decomposability));
  EXPECT_TRUE(has(validate(ProbCircuit({in(0, true), in(0, false),
                                        inner(PcKind::Sum, {0, 1}, {1, -1})},
                                       2)),
                  Property::NegativeWeight));
  EXPECT_TRUE(has(validate(ProbCircuit({in(0, true), inner(PcKind::Sum, {0}, {1, 2})}, 1)),
                  Property::WeightArity));
  EXPECT_TRUE(has(validate(ProbCircuit({in(0, true), inner(PcKind::Product, {5})}, 1)),
                  Property::DanglingChild));
  EXPECT_TRUE(has(validate(ProbCircuit({inner(PcKind::Product, {1}),
                                        inner(PcKind::Product, {0})},
                                       1)),
                  Property::Cycle));
  EXPECT_TRUE(has(validate(ProbCircuit({in(0, true)}, 3)), Property::BadRoot));
  EXPECT_TRUE(has(validate(ProbCircuit({in(0, true), inner(PcKind::Product, {})}, 1)),
                  Property::ChildlessInner));
}

TEST(Validate, SmoothnessCanBeWaived) {
  PcBuilder b;
  const NodeId s = b.sum({b.input(0, true), b.input(1, true)}, {1, 1});
  const ProbCircuit pc = std::move(b).build(s);
  EXPECT_THROW(require_valid(pc), ValidationError);
  EXPECT_NO_THROW(require_valid(pc, Smoothness::Optional));
}

TEST(Evaluate, SmallCircuitByHand) {
  const ProbCircuit pc = small();
  const std::vector<std::uint8_t> x11{1, 1}, x10{1, 0}, x01{0, 1};
  EXPECT_DOUBLE_EQ(evaluate(pc, x11), 0.25);
  EXPECT_DOUBLE_EQ(evaluate(pc, x10), 0.75);
  EXPECT_EQ(evaluate(pc, x01), 0.0);
  EXPECT_EQ(log_evaluate(pc, x01), -std::numeric_limits<double>::infinity());
}

TEST(Evaluate, ShortAssignmentIsScopeError) {
  const std::vector<std::uint8_t> x{1};
  EXPECT_THROW(log_evaluate(small(), x), ScopeError);
}

TEST(Evaluate, EmptyCircuitIsZero) {
  const ProbCircuit empty;
  const std::vector<std::uint8_t> x{1, 0};
  EXPECT_EQ(evaluate(empty, x), 0.0);
  EXPECT_FALSE(evaluate(to_logic(empty), x));
}

TEST(Evaluate, MatchesBruteForceOnRandomCircuits) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(7);
    const ProbCircuit pc = random_circuit(rng, n);
    ASSERT_TRUE(validate(pc).empty());
    for (const auto& x : all_assignments(n)) {
      const double want = brute_probability(pc, x);
      const double got = evaluate(pc, x);
      if (want == 0.0) {
        EXPECT_EQ(log_evaluate(pc, x), -std::numeric_limits<double>::infinity());
      } else {
        EXPECT_NEAR(got, want, 1e-12 * want);
      }
    }
  }
}

TEST(Evaluate, NodeValuesMatchRootValue) {
  const ProbCircuit pc = small();
  std::vector<double> vals;
  const std::vector<std::uint8_t> x{1, 0};
  log_evaluate_nodes(pc, x, vals);
  ASSERT_EQ(vals.size(), pc.size());
  EXPECT_DOUBLE_EQ(vals[pc.root()], log_evaluate(pc, x));
}

// p(x) > 0 exactly when the logical shadow is satisfied.
TEST(Logic, PositiveProbabilityIffSatisfied) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    const ProbCircuit pc = random_circuit(rng, n);
    const LogicCircuit lc = to_logic(pc);
    const auto rows = all_assignments(n);
    const BooleanColumns cols = columns_of(rows, n);
    const RowSet covered = covered_rows(pc, cols);
    const RowSet sat = covered_rows(lc, cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const bool positive = brute_probability(pc, rows[r]) > 0.0;
      EXPECT_EQ(brute_satisfied(lc, rows[r]), positive);
      EXPECT_EQ(evaluate(lc, rows[r]), positive);
      EXPECT_EQ(covered[r], positive);
      EXPECT_EQ(sat[r], positive);
    }
  }
}

TEST(Logic, ShadowKeepsIdsAndChildren) {
  const ProbCircuit pc = small();
  const LogicCircuit lc = to_logic(pc);
  ASSERT_EQ(lc.size(), pc.size());
  for (NodeId id = 0; id < pc.size(); ++id) {
    EXPECT_EQ(lc.unit(id).children, pc.node(id).children);
    const PcKind k = pc.node(id).kind;
    const LcKind want = k == PcKind::Sum       ? LcKind::Or
                        : k == PcKind::Product ? LcKind::And
                                               : LcKind::Input;
    EXPECT_EQ(lc.unit(id).kind, want);
  }
}

TEST(Logic, ZeroWeightIsRejected) {
  PcBuilder b;
  const NodeId s = b.sum({b.input(0, true), b.input(0, false)}, {0.5, 0.0});
  EXPECT_THROW(to_logic(std::move(b).build(s)), ValidationError);
}

TEST(Simplify, DropsZeroWeightsWithoutChangingProbabilities) {
  Rng rng(13);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    const ProbCircuit pc = random_circuit(rng, n);
    std::vector<PcNode> nodes(pc.nodes().begin(), pc.nodes().end());
    for (auto& node : nodes)
      for (double& w : node.weights)
        if (rng.uniform() < 0.3) w = 0.0;
    const ProbCircuit zeroed(nodes, pc.root());
    const ProbCircuit s = simplify(zeroed);
    EXPECT_LE(s.size(), zeroed.size());
    for (const auto& node : s.nodes())
      for (double w : node.weights) EXPECT_GT(w, 0.0);
    for (const auto& x : all_assignments(n))
      EXPECT_EQ(brute_probability(s, x), brute_probability(zeroed, x));
    if (!s.empty()) {
      EXPECT_TRUE(validate(s).empty());
    }
  }
}

TEST(Simplify, DeadRootGivesEmptyCircuit) {
  PcBuilder b;
  const NodeId s = b.sum({b.input(0, true)}, {0.0});
  EXPECT_TRUE(simplify(std::move(b).build(s)).empty());
}

TEST(RemoveEdges, ProductEdgeDropsTheFactor) {
  const ProbCircuit pc = small();
  // The root product's first child is the x0 literal.
  const std::vector<EdgeRef> edges{{pc.root(), 0}};
  const ProbCircuit cut = remove_edges(pc, edges);
  const std::vector<std::uint8_t> x01{0, 1};
  EXPECT_DOUBLE_EQ(evaluate(cut, x01), 0.25);
}

TEST(RemoveEdges, SumEdgeRemovesTheBranch) {
  const ProbCircuit pc = small();
  NodeId sum = 0;
  for (NodeId id = 0; id < pc.size(); ++id)
    if (pc.node(id).kind == PcKind::Sum) sum = id;
  const std::vector<EdgeRef> edges{{sum, 1}};
  const ProbCircuit cut = remove_edges(pc, edges);
  const std::vector<std::uint8_t> x10{1, 0};
  EXPECT_EQ(evaluate(cut, x10), 0.0);
  EXPECT_THROW(remove_edges(pc, std::vector<EdgeRef>{{sum, 9}}), ValidationError);
}

TEST(Scope, FollowsChildren) {
  const ProbCircuit pc = small();
  EXPECT_EQ(scope(pc, pc.root()), (std::vector<VarId>{0, 1}));
}

TEST(RunningExample, RendersItsTheory) {
  const auto ex = putput::testing::running_example();
  ASSERT_TRUE(validate(ex.circuit).empty());
  const std::string formula =
      to_formula(to_logic(ex.circuit), [&](VarId v) { return ex.name(v); });
  EXPECT_EQ(formula, "(((-A∧-B)∨(A∧(-B∨B)))∧(C∨-C))∨(-A∧((-B∧C)∨(-B∧-C)))");
}
