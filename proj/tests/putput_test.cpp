#include "oracles.hpp"
#include "running_example.hpp"
#include "synthetic.hpp"

#include <putput/circuit_io.hpp>
#include <putput/putput.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace putput;
namespace fs = std::filesystem;
namespace pt = putput::testing;

namespace {

std::vector<double> repeated(std::initializer_list<std::pair<double, std::size_t>> runs) {
  std::vector<double> out;
  for (const auto& [v, n] : runs) out.insert(out.end(), n, v);
  return out;
}

double coverage_f1(const ProbCircuit& pc, const Database& db, const ExampleSet& target) {
  return f1_score(covered_rows(pc, db.columns()), db.to_rows(target));
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("putput_test_" + name);
  fs::remove_all(dir);
  return dir;
}

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.mixture.k = 2;
  cfg.mixture.em_iters = 20;
  cfg.mixture.seed = 4;
  cfg.epsilon = 3e-8;
  return cfg;
}

}  // namespace

// --- elbow -----------------------------------------------------------------

TEST(Elbow, SingleCliffSeparatesTheDenseSet) {
  const auto v = repeated({{0.9, 50}, {0.01, 950}});
  EXPECT_EQ(elbow_threshold(v, 0.01), 0.9);
}

TEST(Elbow, HighestOfTwoCliffsWins) {
  const auto v = repeated({{0.9, 30}, {0.5, 100}, {0.01, 870}});
  EXPECT_EQ(elbow_threshold(v, 0.01), 0.9);
}

TEST(Elbow, UniformProfileHasNoElbow) {
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(i / 1000.0);
  try {
    elbow_threshold(v, 0.01);
    FAIL();
  } catch (const ElbowError& e) {
    EXPECT_EQ(e.profile().size(), 1000u);
  }
}

TEST(Elbow, LoneValueAboveANeighbourIsNotACliff) {
  // One stray value above a single lower value: below = 1, the empty step
  // counts as 1 and the ratio fails.
  EXPECT_THROW(elbow_threshold(std::vector<double>{0.5, 0.9}, 0.1), ElbowError);
}

TEST(Elbow, RejectsBadInput) {
  EXPECT_THROW(elbow_threshold(std::vector<double>{}, 0.1), InputError);
  EXPECT_THROW(elbow_threshold(std::vector<double>{1.0}, 0.0), InputError);
  EXPECT_THROW(elbow_threshold(std::vector<double>{std::nan("")}, 0.1), InputError);
}

TEST(Elbow, ProfileCountsValuesStrictlyAbove) {
  const auto p = elbow_profile(std::vector<double>{3, 1, 3, 2});
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0].t, 1.0);
  EXPECT_EQ(p[0].above, 3u);
  EXPECT_EQ(p[1].above, 2u);
  EXPECT_EQ(p[2].above, 0u);
  std::ostringstream os;
  write_profile(os, p);
  EXPECT_EQ(os.str(), "t above\n1 3\n2 2\n3 0\n");
}

// --- step 1 ----------------------------------------------------------------

TEST(Step1, WholeDatabaseTargetScoresOne) {
  const auto syn = pt::make_synthetic(21);
  MixtureConfig mc;
  mc.k = 2;
  mc.em_iters = 10;
  const ProbCircuit pc = learn_mixture(syn.db, syn.positives, mc);
  for (auto m : {PruneMethod::Threshold, PruneMethod::TopDown, PruneMethod::Flows}) {
    const Step1Result r = step1_search(pc, syn.db, syn.db.all(), m);
    EXPECT_EQ(r.report.f1, 1.0) << to_string(m);
  }
}

TEST(Step1, ReportMatchesTheReturnedCircuit) {
  const auto syn = pt::make_synthetic(22);
  MixtureConfig mc;
  mc.k = 2;
  mc.em_iters = 20;
  const ProbCircuit pc = learn_mixture(syn.db, syn.positives, mc);
  for (auto m : {PruneMethod::Threshold, PruneMethod::TopDown, PruneMethod::Flows}) {
    const Step1Result r = step1_search(pc, syn.db, syn.concept_rows, m);
    EXPECT_EQ(r.report.f1, coverage_f1(r.circuit, syn.db, syn.concept_rows));
    // Parameter 0 is on the grid, so the search never does worse than no pruning.
    EXPECT_GE(r.report.f1, coverage_f1(pc, syn.db, syn.concept_rows));
    EXPECT_EQ(r.params.method, m);
    const Step1Result again = step1_search(pc, syn.db, syn.concept_rows, m);
    EXPECT_EQ(write_pc(again.circuit), write_pc(r.circuit));
  }
}

// Two components that disagree on w. The target is drawn from the first one,
// so the second gets no flow and is the first edge to go.
TEST(Step1, FlowsDropTheComponentTheTargetNeverReaches) {
  const Schema s({{"w", {"0", "1"}}, {"x", {"0", "1"}}, {"y", {"0", "1"}}, {"z", {"0", "1"}}});
  PcBuilder b;
  const auto either = [&](std::size_t a) {
    return b.sum({b.input(s.bool_id(a, 1), true), b.input(s.bool_id(a, 1), false)}, {0.5, 0.5});
  };
  const NodeId first = b.product({b.input(s.bool_id(0, 1), true), b.input(s.bool_id(1, 1), true),
                                  either(2), either(3)});
  const NodeId second =
      b.product({b.input(s.bool_id(0, 1), false), either(1), either(2), either(3)});
  const NodeId root = b.sum({first, second}, {0.5, 0.5});
  const ProbCircuit pc = std::move(b).build(root);
  ASSERT_TRUE(validate(pc).empty());

  const Database db(s, pt::all_examples(s));
  ExampleSet target;
  for (std::size_t r = 0; r < db.size(); ++r)
    if (db.row(r)[0] == 1 && db.row(r)[1] == 1) target.push_back(r);
  ASSERT_EQ(target.size(), 4u);

  const Step1Result r = step1_search(pc, db, target, PruneMethod::Flows);
  EXPECT_EQ(r.report.f1, 1.0);
  const LogicCircuit lc = to_logic(r.circuit);
  for (std::size_t row = 0; row < db.size(); ++row)
    EXPECT_EQ(evaluate(lc, db.bits(row)), db.row(row)[0] == 1 && db.row(row)[1] == 1);
}

TEST(Step1, EmptyTargetIsRejected) {
  const auto ex = pt::running_example();
  EXPECT_THROW(step1_search(ex.circuit, ex.all_rows, {}, PruneMethod::Flows), InputError);
}

// --- step 2 ----------------------------------------------------------------

TEST(Step2, NeverDropsBelowTheLowerBound) {
  for (std::uint64_t seed : {23, 24, 25}) {
    const auto syn = pt::make_synthetic(seed);
    MixtureConfig mc;
    mc.k = 2;
    mc.em_iters = 20;
    mc.seed = seed;
    const ProbCircuit pc = learn_mixture(syn.db, syn.positives, mc);
    const Step1Result s1 = step1_search(pc, syn.db, syn.concept_rows, PruneMethod::Flows);
    for (bool strict : {false, true}) {
      const Step2Result s2 = prune_input_nodes(s1.circuit, syn.db, syn.concept_rows, strict);
      EXPECT_EQ(s2.lower_bound, s1.report.f1);
      EXPECT_GE(s2.report.f1, s2.lower_bound);
      EXPECT_EQ(s2.report.f1, coverage_f1(s2.circuit, syn.db, syn.concept_rows));
      EXPECT_LE(s2.circuit.size(), s1.circuit.size());
      EXPECT_GE(s2.sweeps, 1u);
    }
  }
}

// The running example: threshold pruning at 0.1 removes the A branch, and
// input-node pruning against the two densest rows keeps ¬A ∧ ¬B.
TEST(RunningExample, PrunesToNotANotB) {
  const auto ex = pt::running_example();
  const auto name = [&](VarId v) { return ex.name(v); };
  EXPECT_EQ(to_formula(to_logic(ex.circuit), name),
            "(((-A∧-B)∨(A∧(-B∨B)))∧(C∨-C))∨(-A∧((-B∧C)∨(-B∧-C)))");

  const ProbCircuit step1 = prune_threshold(ex.circuit, 0.1);
  const ExampleSet target = compute_target(ex.circuit, ex.all_rows, 0.2);
  ASSERT_EQ(target.size(), 2u);
  EXPECT_EQ(to_formula(to_logic(step1), name),
            "((-A∧-B)∧(C∨-C))∨(-A∧((-B∧C)∨(-B∧-C)))");
  // The sweep drops C and -C from the right branch, then the whole left
  // branch, whose rows the right branch already covers.
  const Step2Result s2 = prune_input_nodes(step1, ex.all_rows, target);
  EXPECT_EQ(s2.report.f1, 1.0);
  EXPECT_EQ(to_formula(to_logic(s2.circuit), name), "-A∧(-B∨-B)");

  const LogicCircuit lc = to_logic(s2.circuit);
  for (std::size_t r = 0; r < ex.all_rows.size(); ++r) {
    const Example& e = ex.all_rows.row(r);
    EXPECT_EQ(evaluate(lc, ex.all_rows.bits(r)), e[0] == 0 && e[1] == 0);
  }
  const Cnf cnf = extract_cnf(lc, ex.schema);
  EXPECT_EQ(emit_query(cnf, ex.schema, QueryDialect::Human), "A = 0 AND B = 0");
}

// --- pipeline --------------------------------------------------------------

TEST(Pipeline, PositivesEqualToTheDatabaseGiveF1One) {
  const auto ex = pt::running_example();
  PipelineConfig cfg;
  cfg.mixture.k = 1;
  cfg.threshold = 0.0;
  const PutputResult r = run_pipeline(ex.all_rows, ex.all_rows.all(), cfg);
  EXPECT_EQ(r.target.size(), 8u);
  EXPECT_EQ(r.final_report.f1, 1.0);
  EXPECT_TRUE(r.cnf.is_true());
}

TEST(Pipeline, FindsThePlantedVariables) {
  const auto syn = pt::make_synthetic(1000);
  const PutputResult r = run_pipeline(syn.db, syn.positives, small_config());
  const std::string q = emit_query(r.cnf, syn.db.schema(), QueryDialect::Human);
  std::size_t found = 0;
  for (const auto& [a, v] : syn.concepts[0].terms)
    found += q.find(syn.db.schema().variable(a).name + " ") != std::string::npos;
  EXPECT_GE(found, 2u) << q;
  EXPECT_GE(r.final_report.f1, r.lower_bound);
}

TEST(Pipeline, StageErrorsNameTheStage) {
  const auto ex = pt::running_example();
  try {
    run_pipeline(ex.all_rows, {}, PipelineConfig{});
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "learn");
    EXPECT_TRUE(e.input_fault());
  }
  PipelineConfig cfg;
  cfg.threshold = 2.0;
  try {
    run_pipeline(ex.circuit, ex.all_rows, cfg);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "elbow");
  }
}

TEST(Pipeline, OutputDirectoryIsDeterministicAndReloads) {
  const auto syn = pt::make_synthetic(1001);
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  write_result(a, run_pipeline(syn.db, syn.positives, small_config()), syn.db.schema());
  write_result(b, run_pipeline(syn.db, syn.positives, small_config()), syn.db.schema());

  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path();
  }
  EXPECT_EQ(files, 8u);

  const Schema schema = read_schema_file(a / "schema.txt");
  EXPECT_EQ(schema, syn.db.schema());
  const ProbCircuit learned = import_circuit(a / "learned.pc");
  import_circuit(a / "step1.pc");
  const ProbCircuit final_pc = import_circuit(a / "final.pc", Smoothness::Optional);
  const LogicCircuit lc = read_lc_file(a / "final.lc");
  EXPECT_EQ(write_lc(lc), write_lc(to_logic(final_pc)));
  const CnfFile cnf = read_cnf_file(a / "theory.cnf", schema);
  EXPECT_EQ(cnf.schema_ref, "schema.txt");
  const ExampleSet target = read_example_set_file(a / "target.txt", syn.db);
  EXPECT_FALSE(target.empty());
  EXPECT_EQ(slurp(a / "learned.pc"), write_pc(learned));

  fs::remove_all(a);
  fs::remove_all(b);
}
