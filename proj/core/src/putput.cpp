#include <putput/circuit_io.hpp>
#include <putput/putput.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

namespace putput {
namespace {

struct Candidate {
  double parameter = 0.0;
  ProbCircuit circuit;
  double f1 = 0.0;
};

// Higher f1, then fewer nodes, then the smaller parameter.
bool better(const Candidate& a, const Candidate& b) {
  if (a.f1 != b.f1) return a.f1 > b.f1;
  if (a.circuit.size() != b.circuit.size()) return a.circuit.size() < b.circuit.size();
  return a.parameter < b.parameter;
}

double max_sum_weight(const ProbCircuit& pc) {
  double w = 0.0;
  for (const auto& n : pc.nodes())
    for (double x : n.weights) w = std::max(w, x);
  return w;
}

}  // namespace

Step1Result step1_search(const ProbCircuit& pc, const Database& db,
                         const ExampleSet& target, PruneMethod method,
                         const SearchOptions& options) {
  if (target.empty()) throw InputError("the target set is empty; f1 is undefined");
  if (options.grid_points < 2) throw InputError("the search grid needs two points");
  const RowSet target_rows = db.to_rows(target);

  std::vector<EdgeScore> ranked;
  if (method == PruneMethod::TopDown) ranked = rank_edges(top_down_scores(pc));
  if (method == PruneMethod::Flows) ranked = rank_edges(flow_scores(pc, db, target));
  const double hi = method == PruneMethod::Threshold ? max_sum_weight(pc) : 1.0;

  std::map<double, Candidate> cache;
  const auto evaluate = [&](double x) -> const Candidate& {
    auto it = cache.find(x);
    if (it != cache.end()) return it->second;
    Candidate c;
    c.parameter = x;
    c.circuit = method == PruneMethod::Threshold ? prune_threshold(pc, x)
                                                 : prune_ranked(pc, ranked, x);
    c.f1 = f1_score(covered_rows(c.circuit, db.columns()), target_rows);
    return cache.emplace(x, std::move(c)).first->second;
  };

  const std::size_t n = options.grid_points;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i)
    grid[i] = i + 1 == n ? hi : hi * static_cast<double>(i) / static_cast<double>(n - 1);
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (better(evaluate(grid[i]), evaluate(grid[best_i]))) best_i = i;

  double a = grid[best_i == 0 ? 0 : best_i - 1];
  double b = grid[std::min(best_i + 1, n - 1)];
  const double tol = options.resolution * hi;
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  while (b - a > tol) {
    const double c = b - ratio * (b - a);
    const double d = a + ratio * (b - a);
    if (better(evaluate(c), evaluate(d)))
      b = d;
    else
      a = c;
  }

  const Candidate* best = nullptr;
  for (const auto& [x, c] : cache)
    if (!best || better(c, *best)) best = &c;

  Step1Result out;
  out.circuit = best->circuit;
  out.params = PruneParams::with(method, best->parameter);
  out.report = score(covered_rows(out.circuit, db.columns()), target_rows);
  out.evaluations = cache.size();
  return out;
}

Step2Result prune_input_nodes(const ProbCircuit& pc, const Database& db,
                              const ExampleSet& target, bool strict) {
  const RowSet target_rows = db.to_rows(target);
  const auto f1_of = [&](const ProbCircuit& c) {
    return f1_score(covered_rows(c, db.columns()), target_rows);
  };

  Step2Result out;
  out.lower_bound = f1_of(pc);
  out.circuit = pc;

  // Parent edges of every input node, ascending by parent id.
  std::vector<std::vector<EdgeRef>> parents(pc.size());
  for (NodeId z = 0; z < pc.size(); ++z) {
    const auto& node = pc.node(z);
    for (std::uint32_t p = 0; p < node.children.size(); ++p)
      if (pc.node(node.children[p]).kind == PcKind::Input)
        parents[node.children[p]].push_back({z, p});
  }
  std::vector<std::size_t> kept_children(pc.size());
  for (NodeId z = 0; z < pc.size(); ++z) kept_children[z] = pc.node(z).children.size();

  std::vector<EdgeRef> removed;
  std::size_t previous = 0;
  std::size_t current = pc.size();
  while (current != previous) {
    previous = current;
    ++out.sweeps;
    for (NodeId n = 0; n < pc.size(); ++n) {
      for (const EdgeRef& e : parents[n]) {
        if (std::binary_search(removed.begin(), removed.end(), e)) continue;
        if (pc.node(e.node).kind == PcKind::Product && kept_children[e.node] == 1) continue;
        std::vector<EdgeRef> trial = removed;
        trial.insert(std::upper_bound(trial.begin(), trial.end(), e), e);
        ProbCircuit candidate = remove_edges(pc, trial);
        const double f1 = f1_of(candidate);
        if (strict ? f1 > out.lower_bound : f1 >= out.lower_bound) {
          removed = std::move(trial);
          --kept_children[e.node];
          out.circuit = std::move(candidate);
          ++out.accepted;
        }
      }
    }
    current = out.circuit.size();
  }
  out.report = score(covered_rows(out.circuit, db.columns()), target_rows);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const InputError& e) {
    throw StageError(stage, e.what(), true);
  } catch (const ParseError& e) {
    throw StageError(stage, e.what(), true);
  } catch (const ScopeError& e) {
    throw StageError(stage, e.what(), true);
  } catch (const ValidationError& e) {
    throw StageError(stage, e.what(), true);
  } catch (const ElbowError& e) {
    throw StageError(stage, e.what(), true);
  } catch (const BudgetError& e) {
    throw StageError(stage, e.what(), true);
  } catch (const std::exception& e) {
    throw StageError(stage, e.what(), false);
  }
}

}  // namespace

PutputResult run_pipeline(const ProbCircuit& learned, const Database& db,
                          const PipelineConfig& config) {
  PutputResult r;
  r.learned = learned;
  r.scale = config.scale;

  in_stage("validate", [&] {
    require_valid(learned, Smoothness::Optional);
    if (learned.num_vars() > db.schema().num_bool())
      throw ScopeError("circuit references boolean variables beyond the schema");
  });

  in_stage("elbow", [&] {
    if (config.threshold) {
      r.threshold = *config.threshold;
      r.target = config.scale == ElbowScale::Log
                     ? compute_target_log(learned, db, r.threshold)
                     : compute_target(learned, db, r.threshold);
    } else {
      try {
        Elbow e = find_elbow(learned, db, config.epsilon, config.scale);
        r.threshold = e.threshold;
        r.target = std::move(e.target);
      } catch (const ElbowError&) {
        // No cliff: fall back to the rows sharing the highest likelihood.
        auto values = log_likelihoods(learned, db);
        const double top = *std::max_element(values.begin(), values.end());
        r.threshold = config.scale == ElbowScale::Log ? top : std::exp(top);
        for (std::size_t i = 0; i < values.size(); ++i)
          if (values[i] == top) r.target.push_back(i);
        r.warnings.push_back(
            "no likelihood elbow found; the target is the top-likelihood plateau");
      }
    }
    if (r.target.empty()) throw InputError("the threshold selects no rows");
  });

  in_stage("step1", [&] {
    Step1Result s = step1_search(learned, db, r.target, config.method, config.search);
    r.step1 = std::move(s.circuit);
    r.params = s.params;
    r.step1_report = s.report;
  });

  in_stage("step2", [&] {
    Step2Result s = prune_input_nodes(r.step1, db, r.target, config.strict);
    r.final_circuit = std::move(s.circuit);
    r.lower_bound = s.lower_bound;
    r.final_report = s.report;
  });

  in_stage("extract", [&] {
    r.logic = to_logic(r.final_circuit);
    r.cnf = extract_cnf(r.logic, db.schema(), config.clause_budget);
    r.incomprehensibility_after = incomprehensibility(r.cnf, db.schema());
    try {
      const Cnf before =
          extract_cnf(to_logic(r.step1), db.schema(), config.clause_budget);
      r.incomprehensibility_before = incomprehensibility(before, db.schema());
    } catch (const BudgetError&) {
      r.warnings.push_back("step-1 theory exceeds the clause budget; "
                           "its incomprehensibility is not reported");
    }
  });
  return r;
}

PutputResult run_pipeline(const Database& db, const ExampleSet& positives,
                          const PipelineConfig& config) {
  std::vector<std::string> warnings;
  const ProbCircuit learned = in_stage("learn", [&] {
    if (positives.empty()) throw InputError("the positive set is empty");
    return learn_mixture(db, positives, config.mixture, &warnings);
  });
  PutputResult r = run_pipeline(learned, db, config);
  r.warnings.insert(r.warnings.begin(), warnings.begin(), warnings.end());
  return r;
}

// ---------------------------------------------------------------------------

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_result_report(std::ostream& os, const PutputResult& r, const Schema& schema) {
  os << "method: " << to_string(r.params.method) << '\n';
  os << "parameter: " << exact(r.params.parameter()) << '\n';
  os << "threshold: " << exact(r.threshold) << '\n';
  os << "threshold_scale: " << to_string(r.scale) << '\n';
  os << "target_size: " << r.target.size() << '\n';
  os << "size_learned: " << r.learned.size() << '\n';
  os << "size_step1: " << r.step1.size() << '\n';
  os << "size_final: " << r.final_circuit.size() << '\n';
  write_report(os, r.step1_report, "step1_");
  os << "lower_bound: " << fixed(r.lower_bound, 6) << '\n';
  write_report(os, r.final_report, "final_");
  os << "clauses: " << r.cnf.size() << '\n';
  os << "incomprehensibility_before: "
     << (r.incomprehensibility_before ? fixed(*r.incomprehensibility_before, 5)
                                      : std::string("unavailable"))
     << '\n';
  os << "incomprehensibility_after: " << fixed(r.incomprehensibility_after, 5) << '\n';
  os << "query: " << emit_query(r.cnf, schema, QueryDialect::Human) << '\n';
  for (const auto& w : r.warnings) os << "warning: " << w << '\n';
}

void write_result(const std::filesystem::path& dir, const PutputResult& r,
                  const Schema& schema) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());
  write_pc_file(dir / "learned.pc", r.learned);
  write_pc_file(dir / "step1.pc", r.step1);
  write_pc_file(dir / "final.pc", r.final_circuit);
  write_lc_file(dir / "final.lc", r.logic);
  write_schema_file(dir / "schema.txt", schema);
  write_cnf_file(dir / "theory.cnf", r.cnf, schema, "schema.txt");
  write_example_set_file(dir / "target.txt", r.target);
  std::ofstream os(dir / "report.txt", std::ios::binary);
  if (!os) throw InputError("cannot write " + (dir / "report.txt").string());
  write_result_report(os, r, schema);
}

}  // namespace putput
