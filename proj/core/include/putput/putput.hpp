#pragma once

#include <putput/circuit.hpp>
#include <putput/comprehensibility.hpp>
#include <putput/data.hpp>
#include <putput/errors.hpp>
#include <putput/learner.hpp>
#include <putput/metrics.hpp>
#include <putput/pruning.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace putput {

// ---------------------------------------------------------------------------
// Elbow threshold
// ---------------------------------------------------------------------------

// Scale the elbow scans: raw probabilities, or natural-log likelihoods with
// epsilon measured in nats.
enum class ElbowScale : std::uint8_t { Linear, Log };

std::string_view to_string(ElbowScale s) noexcept;

// f(t) = number of values strictly greater than t, at one candidate t.
struct ProfilePoint {
  double t = 0.0;
  std::size_t above = 0;
};

// One point per distinct value, ascending.
std::vector<ProfilePoint> elbow_profile(std::span<const double> values);
void write_profile(std::ostream& os, std::span<const ProfilePoint> profile);

class ElbowError : public Error {
 public:
  ElbowError(const std::string& what, std::vector<ProfilePoint> profile)
      : Error(what), profile_(std::move(profile)) {}
  const std::vector<ProfilePoint>& profile() const noexcept { return profile_; }

 private:
  std::vector<ProfilePoint> profile_;
};

// Finds the likelihood cliff. With f(x) = #{s : s > x} and the counts
//
//   below = f(t-e) - f(t)      values in (t-e, t]
//   step  = f(t) - f(t+e)      values in (t, t+e]
//   after = f(t+e) - f(t+2e)   values in (t+e, t+2e]
//
// a candidate t (a distinct value with f(t) > 0) is accepted when
// max(step, 1) / below < 1/4 and, if step > 0, after / step > 1/4. A
// candidate with below = 0 is skipped. Counting an empty step as one keeps a
// single stray value above a lone neighbour from passing as a cliff, and an
// empty step means the profile is flat right above t, so the second ratio is
// not required there. Candidates are tried from the highest down, so the
// highest cliff wins. Returns the smallest value above the accepted
// candidate, so {s : s >= result} is exactly the set above the cliff. Throws
// ElbowError (carrying the profile) when no candidate qualifies.
double elbow_threshold(std::span<const double> values, double epsilon);

struct Elbow {
  double threshold = 0.0;  // on `scale`
  ElbowScale scale = ElbowScale::Linear;
  ExampleSet target;
};

// Evaluates the circuit on every row and applies elbow_threshold on the
// requested scale. Linear scale uses exp(log p), so rows whose probability
// underflows all collapse to 0.
Elbow find_elbow(const ProbCircuit& pc, const Database& db, double epsilon,
                 ElbowScale scale);

// ---------------------------------------------------------------------------
// Step 1: parameter search
// ---------------------------------------------------------------------------

struct SearchOptions {
  std::size_t grid_points = 21;
  // Golden-section refinement stops once the bracket is narrower than this
  // fraction of the parameter range.
  double resolution = 1e-3;
};

struct Step1Result {
  ProbCircuit circuit;
  PruneParams params;
  EvalReport report;
  std::size_t evaluations = 0;
};

// Maximizes f1(covered(prune(pc, method, x)), target) over the method's
// parameter x. The range is [0, 1] for rank-based methods and [0, max sum
// weight] for Threshold. A grid is followed by golden-section refinement of
// the bracket around the best grid point. Among equal f1 the smaller circuit
// wins, then the smaller parameter. Flows are computed on `target`.
Step1Result step1_search(const ProbCircuit& pc, const Database& db,
                         const ExampleSet& target, PruneMethod method,
                         const SearchOptions& options = {});

// ---------------------------------------------------------------------------
// Step 2: input-node pruning
// ---------------------------------------------------------------------------

struct Step2Result {
  ProbCircuit circuit;
  double lower_bound = 0.0;
  EvalReport report;
  std::size_t sweeps = 0;
  std::size_t accepted = 0;
};

// Sweeps the input nodes of `pc` in ascending id and, for each, its parent
// edges in ascending parent id. Each edge is removed tentatively and the
// removal is kept when the f1 of the covered set stays >= lb (> lb with
// `strict`), where lb is the f1 of `pc` itself and never changes. Removing a
// product's edge drops that literal from the conjunction; a trial that would
// leave a product with no children is skipped. Sweeps repeat until the
// circuit size stops changing.
Step2Result prune_input_nodes(const ProbCircuit& pc, const Database& db,
                              const ExampleSet& target, bool strict = false);

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct PipelineConfig {
  MixtureConfig mixture;
  PruneMethod method = PruneMethod::Flows;
  double epsilon = 1e-5;
  ElbowScale scale = ElbowScale::Linear;
  // Skips the elbow search: target = {p >= threshold} on `scale`.
  std::optional<double> threshold;
  bool strict = false;
  std::size_t clause_budget = kDefaultClauseBudget;
  SearchOptions search;
};

struct PutputResult {
  ProbCircuit learned;
  double threshold = 0.0;
  ElbowScale scale = ElbowScale::Linear;
  ExampleSet target;

  ProbCircuit step1;
  PruneParams params;
  EvalReport step1_report;

  ProbCircuit final_circuit;
  double lower_bound = 0.0;
  EvalReport final_report;

  LogicCircuit logic;
  Cnf cnf;
  // Unset when the step-1 circuit's CNF exceeds the clause budget.
  std::optional<double> incomprehensibility_before;
  double incomprehensibility_after = 0.0;

  std::vector<std::string> warnings;
};

// Thrown by the pipeline; the message starts with the failing stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what, bool input_fault)
      : Error(stage + ": " + what), stage_(std::move(stage)), input_fault_(input_fault) {}
  const std::string& stage() const noexcept { return stage_; }
  // The cause was bad input (parse, scope, validation, input errors) rather
  // than a bug.
  bool input_fault() const noexcept { return input_fault_; }

 private:
  std::string stage_;
  bool input_fault_ = false;
};

// learn -> elbow -> target -> step 1 -> step 2 -> logic circuit -> CNF.
PutputResult run_pipeline(const Database& db, const ExampleSet& positives,
                          const PipelineConfig& config);

// The same pipeline on an already learned circuit.
PutputResult run_pipeline(const ProbCircuit& learned, const Database& db,
                          const PipelineConfig& config);

// Writes learned.pc, step1.pc, final.pc, final.lc, theory.cnf (referencing
// schema.txt), schema.txt, target.txt and report.txt into `dir`, creating it
// if needed.
void write_result(const std::filesystem::path& dir, const PutputResult& result,
                  const Schema& schema);

// report.txt contents: `key: value` lines in a fixed order.
void write_result_report(std::ostream& os, const PutputResult& result,
                         const Schema& schema);

}  // namespace putput
