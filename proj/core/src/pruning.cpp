#include <putput/errors.hpp>
#include <putput/parallel.hpp>
#include <putput/pruning.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace putput {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_evaluable(const ProbCircuit& pc) {
  if (!pc.empty() && !pc.well_formed())
    throw ValidationError("cannot prune a malformed circuit");
}

// Offset of each sum node's first edge in the flat sum_edges() order.
std::vector<std::size_t> edge_offsets(const ProbCircuit& pc, std::size_t& total) {
  std::vector<std::size_t> offsets(pc.size(), 0);
  total = 0;
  for (NodeId id = 0; id < pc.size(); ++id) {
    offsets[id] = total;
    if (pc.node(id).kind == PcKind::Sum) total += pc.node(id).children.size();
  }
  return offsets;
}

std::vector<EdgeScore> with_scores(const ProbCircuit& pc, const std::vector<double>& s) {
  std::vector<EdgeScore> out;
  out.reserve(s.size());
  std::size_t k = 0;
  for (const auto& e : sum_edges(pc)) out.push_back({e, s[k++]});
  return out;
}

}  // namespace

std::string_view to_string(PruneMethod m) noexcept {
  switch (m) {
    case PruneMethod::Threshold: return "threshold";
    case PruneMethod::TopDown: return "topdown";
    case PruneMethod::Flows: return "flows";
  }
  return "unknown";
}

std::optional<PruneMethod> parse_prune_method(std::string_view name) noexcept {
  if (name == "threshold") return PruneMethod::Threshold;
  if (name == "topdown" || name == "top-down") return PruneMethod::TopDown;
  if (name == "flows") return PruneMethod::Flows;
  return std::nullopt;
}

void check(const PruneParams& params) {
  if (params.method == PruneMethod::Threshold) {
    if (!(params.alpha >= 0.0)) throw InputError("alpha must be >= 0");
  } else if (!(params.fraction >= 0.0 && params.fraction <= 1.0)) {
    throw InputError("fraction must lie in [0, 1]");
  }
}

std::vector<EdgeRef> sum_edges(const ProbCircuit& pc) {
  std::vector<EdgeRef> out;
  for (NodeId id = 0; id < pc.size(); ++id) {
    const auto& n = pc.node(id);
    if (n.kind != PcKind::Sum) continue;
    for (std::uint32_t i = 0; i < n.children.size(); ++i) out.push_back({id, i});
  }
  return out;
}

std::vector<EdgeScore> top_down_scores(const ProbCircuit& pc) {
  require_evaluable(pc);
  if (pc.empty()) return {};
  std::size_t total = 0;
  const auto offsets = edge_offsets(pc, total);
  std::vector<double> scores(total, 0.0);
  std::vector<double> mass(pc.size(), 0.0);
  mass[pc.root()] = 1.0;
  const auto order = pc.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId id = *it;
    const auto& n = pc.node(id);
    if (n.kind == PcKind::Product) {
      for (NodeId c : n.children) mass[c] += mass[id];
    } else if (n.kind == PcKind::Sum) {
      double total_w = 0.0;
      for (double w : n.weights) total_w += w;
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        const double share = total_w > 0.0 ? mass[id] * n.weights[i] / total_w : 0.0;
        scores[offsets[id] + i] += share;
        mass[n.children[i]] += share;
      }
    }
  }
  return with_scores(pc, scores);
}

std::vector<EdgeScore> flow_scores(const ProbCircuit& pc, const Database& db,
                                   const ExampleSet& examples) {
  require_evaluable(pc);
  if (pc.empty()) return {};
  if (examples.empty()) throw InputError("flow pruning needs a non-empty example set");
  if (pc.num_vars() > db.schema().num_bool())
    throw ScopeError("circuit scope exceeds the schema's boolean expansion");
  std::size_t total = 0;
  const auto offsets = edge_offsets(pc, total);
  const auto order = pc.topological_order();

  constexpr std::size_t kChunk = 32;
  const std::size_t chunks = (examples.size() + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> partial(chunks);
  parallel_chunks(examples.size(), kChunk, [&](std::size_t c, std::size_t b, std::size_t e) {
    std::vector<double> acc(total, 0.0);
    std::vector<double> value;
    std::vector<double> flow(pc.size());
    for (std::size_t k = b; k < e; ++k) {
      const std::size_t r = examples[k];
      if (r >= db.size()) throw InputError("flow example outside the database");
      log_evaluate_nodes(pc, db.bits(r), value);
      std::fill(flow.begin(), flow.end(), 0.0);
      flow[pc.root()] = 1.0;
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const NodeId id = *it;
        const double f = flow[id];
        if (f == 0.0) continue;
        const auto& n = pc.node(id);
        if (n.kind == PcKind::Product) {
          for (NodeId ch : n.children) flow[ch] += f;
        } else if (n.kind == PcKind::Sum) {
          if (value[id] == kNegInf) continue;
          for (std::size_t i = 0; i < n.children.size(); ++i) {
            const double w = n.weights[i];
            const double v = value[n.children[i]];
            if (w <= 0.0 || v == kNegInf) continue;
            const double ef = f * std::exp(std::log(w) + v - value[id]);
            acc[offsets[id] + i] += ef;
            flow[n.children[i]] += ef;
          }
        }
      }
    }
    partial[c] = std::move(acc);
  });
  std::vector<double> scores(total, 0.0);
  for (const auto& p : partial)
    for (std::size_t i = 0; i < total; ++i) scores[i] += p[i];
  return with_scores(pc, scores);
}

std::vector<EdgeScore> rank_edges(std::vector<EdgeScore> scores) {
  std::stable_sort(scores.begin(), scores.end(),
                   [](const EdgeScore& a, const EdgeScore& b) {
                     if (a.score != b.score) return a.score < b.score;
                     return a.edge < b.edge;
                   });
  return scores;
}

std::size_t prune_count(double fraction, std::size_t edges) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw InputError("fraction must lie in [0, 1]");
  const double raw = std::floor(fraction * static_cast<double>(edges) + 1e-9);
  return std::min(edges, static_cast<std::size_t>(raw));
}

ProbCircuit prune_ranked(const ProbCircuit& pc, const std::vector<EdgeScore>& ranked,
                         double fraction) {
  const std::size_t n = prune_count(fraction, ranked.size());
  std::vector<EdgeRef> drop;
  drop.reserve(n);
  for (std::size_t i = 0; i < n; ++i) drop.push_back(ranked[i].edge);
  return remove_edges(pc, drop);
}

ProbCircuit prune_threshold(const ProbCircuit& pc, double alpha) {
  require_evaluable(pc);
  if (!(alpha >= 0.0)) throw InputError("alpha must be >= 0");
  std::vector<EdgeRef> drop;
  for (const auto& e : sum_edges(pc))
    if (pc.node(e.node).weights[e.position] < alpha) drop.push_back(e);
  return remove_edges(pc, drop);
}

ProbCircuit prune_top_down(const ProbCircuit& pc, double fraction) {
  return prune_ranked(pc, rank_edges(top_down_scores(pc)), fraction);
}

ProbCircuit prune_flows(const ProbCircuit& pc, const Database& db,
                        const ExampleSet& examples, double fraction) {
  return prune_ranked(pc, rank_edges(flow_scores(pc, db, examples)), fraction);
}

ProbCircuit prune(const ProbCircuit& pc, const PruneParams& params, const Database* db,
                  const ExampleSet* flow_set) {
  check(params);
  switch (params.method) {
    case PruneMethod::Threshold: return prune_threshold(pc, params.alpha);
    case PruneMethod::TopDown: return prune_top_down(pc, params.fraction);
    case PruneMethod::Flows:
      if (!db || !flow_set) throw InputError("flow pruning needs a database and flow set");
      return prune_flows(pc, *db, *flow_set, params.fraction);
  }
  throw InputError("unknown pruning method");
}

}  // namespace putput
