#pragma once

#include <putput/circuit.hpp>
#include <putput/data.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace putput {

enum class PruneMethod : std::uint8_t { Threshold, TopDown, Flows };

std::string_view to_string(PruneMethod m) noexcept;
std::optional<PruneMethod> parse_prune_method(std::string_view name) noexcept;

// Arguments of one pruning call. `alpha` is read by Threshold, `fraction` by
// the rank-based methods (TopDown, Flows).
struct PruneParams {
  PruneMethod method = PruneMethod::Flows;
  double alpha = 0.0;
  double fraction = 0.0;

  // The method's scalar search parameter.
  double parameter() const noexcept {
    return method == PruneMethod::Threshold ? alpha : fraction;
  }
  static PruneParams with(PruneMethod m, double value) {
    PruneParams p;
    p.method = m;
    (m == PruneMethod::Threshold ? p.alpha : p.fraction) = value;
    return p;
  }
};

// Throws InputError unless alpha >= 0 and fraction is in [0, 1].
void check(const PruneParams& params);

struct EdgeScore {
  EdgeRef edge;
  double score = 0.0;
};

// Every sum edge, in (node, position) order.
std::vector<EdgeRef> sum_edges(const ProbCircuit& pc);

// Unit mass enters at the root; a sum passes mass * w / sum(w) down each edge
// and a product passes its full mass to every child. Scores are the per-edge
// masses summed over all paths. Stored weights are not modified.
std::vector<EdgeScore> top_down_scores(const ProbCircuit& pc);

// Circuit flows: for each example x, the root carries flow 1; at a sum n with
// flow F, edge (n, c) carries F * w_c * p_c(x) / p_n(x) (0 if p_n(x) = 0); a
// product passes F to every child. Scores are summed over `examples`.
std::vector<EdgeScore> flow_scores(const ProbCircuit& pc, const Database& db,
                                   const ExampleSet& examples);

// Sorted lowest score first; ties go to the lower (node, position).
std::vector<EdgeScore> rank_edges(std::vector<EdgeScore> scores);

// Number of edges a rank-based method removes: floor(fraction * edges).
std::size_t prune_count(double fraction, std::size_t edges);

// Removes the first prune_count(fraction, ranked.size()) ranked edges and
// simplifies.
ProbCircuit prune_ranked(const ProbCircuit& pc, const std::vector<EdgeScore>& ranked,
                         double fraction);

// Removes every sum edge with weight < alpha, then simplifies.
ProbCircuit prune_threshold(const ProbCircuit& pc, double alpha);
ProbCircuit prune_top_down(const ProbCircuit& pc, double fraction);
ProbCircuit prune_flows(const ProbCircuit& pc, const Database& db,
                        const ExampleSet& examples, double fraction);

// Dispatch on params.method. Flows needs `db` and `flow_set`.
ProbCircuit prune(const ProbCircuit& pc, const PruneParams& params,
                  const Database* db = nullptr, const ExampleSet* flow_set = nullptr);

}  // namespace putput
