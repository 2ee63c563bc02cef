#include <putput/errors.hpp>
#include <putput/learner.hpp>
#include <putput/parallel.hpp>
#include <putput/random.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace putput {
namespace {

constexpr std::size_t kChunk = 64;

struct Stats {
  std::vector<double> mass;                 // [component]
  std::vector<std::vector<double>> counts;  // [component][boolean id]
  double log_likelihood = 0.0;

  Stats(std::size_t k, std::size_t num_bool)
      : mass(k, 0.0), counts(k, std::vector<double>(num_bool, 0.0)) {}

  void add(const Stats& o) {
    for (std::size_t c = 0; c < mass.size(); ++c) {
      mass[c] += o.mass[c];
      for (std::size_t b = 0; b < counts[c].size(); ++b) counts[c][b] += o.counts[c][b];
    }
    log_likelihood += o.log_likelihood;
  }
};

void m_step(const Stats& s, const Schema& schema, double smoothing, Mixture& m) {
  const std::size_t k = s.mass.size();
  double total = 0.0;
  for (double w : s.mass) total += w;
  for (std::size_t c = 0; c < k; ++c) {
    m.prior[c] = (s.mass[c] + smoothing) / (total + smoothing * static_cast<double>(k));
    for (std::size_t a = 0; a < schema.size(); ++a) {
      const std::size_t card = schema.cardinality(a);
      const double denom = s.mass[c] + smoothing * static_cast<double>(card);
      for (std::size_t v = 0; v < card; ++v)
        m.cpt[c][a][v] = (s.counts[c][schema.bool_id(a, v)] + smoothing) / denom;
    }
  }
}

double log_prior_term(const Mixture& m, double smoothing) {
  double total = 0.0;
  for (double p : m.prior) total += std::log(p);
  for (const auto& comp : m.cpt)
    for (const auto& var : comp)
      for (double p : var) total += std::log(p);
  return smoothing * total;
}

Stats e_step(const Database& db, const ExampleSet& positives, const Mixture& m) {
  const std::size_t k = m.prior.size();
  const Schema& schema = db.schema();
  const std::size_t chunks = (positives.size() + kChunk - 1) / kChunk;
  std::vector<Stats> partial(chunks, Stats(k, schema.num_bool()));
  parallel_chunks(positives.size(), kChunk,
                  [&](std::size_t chunk, std::size_t begin, std::size_t end) {
                    Stats& out = partial[chunk];
                    std::vector<double> lj(k);
                    for (std::size_t i = begin; i < end; ++i) {
                      const Example& e = db.row(positives[i]);
                      double best = -std::numeric_limits<double>::infinity();
                      for (std::size_t c = 0; c < k; ++c) {
                        double l = std::log(m.prior[c]);
                        for (std::size_t a = 0; a < e.size(); ++a)
                          l += std::log(m.cpt[c][a][e[a]]);
                        lj[c] = l;
                        best = std::max(best, l);
                      }
                      double z = 0.0;
                      for (double l : lj) z += std::exp(l - best);
                      const double log_z = best + std::log(z);
                      out.log_likelihood += log_z;
                      for (std::size_t c = 0; c < k; ++c) {
                        const double r = std::exp(lj[c] - log_z);
                        out.mass[c] += r;
                        for (std::size_t a = 0; a < e.size(); ++a)
                          out.counts[c][schema.bool_id(a, e[a])] += r;
                      }
                    }
                  });
  Stats total(k, schema.num_bool());
  for (const auto& p : partial) total.add(p);
  return total;
}

std::size_t hamming(const Example& a, const Example& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

}  // namespace

Mixture fit_mixture(const Database& db, const ExampleSet& positives,
                    const MixtureConfig& cfg) {
  if (positives.empty()) throw InputError("cannot learn from an empty positive set");
  if (cfg.k == 0) throw InputError("component count k must be at least 1");
  if (cfg.em_iters == 0) throw InputError("EM iteration count must be at least 1");
  if (!(cfg.smoothing > 0.0) || !std::isfinite(cfg.smoothing))
    throw InputError("smoothing must be a positive finite number");
  for (std::size_t r : positives)
    if (r >= db.size())
      throw InputError("positive row " + std::to_string(r) + " is outside the database");

  const Schema& schema = db.schema();
  Mixture m;
  std::size_t k = cfg.k;
  if (k > positives.size()) {
    m.warnings.push_back("k=" + std::to_string(k) + " exceeds the " +
                         std::to_string(positives.size()) +
                         " positive examples; clamped to " +
                         std::to_string(positives.size()));
    k = positives.size();
  }
  m.prior.assign(k, 0.0);
  m.cpt.assign(k, {});
  for (auto& comp : m.cpt)
    for (std::size_t a = 0; a < schema.size(); ++a)
      comp.emplace_back(schema.cardinality(a), 0.0);

  // Hard assignment of every positive to its nearest seed row.
  Rng rng(cfg.seed);
  const ExampleSet seeds = sample_without_replacement(positives, k, rng);
  Stats init(k, schema.num_bool());
  for (std::size_t r : positives) {
    const Example& e = db.row(r);
    std::size_t best = 0;
    std::size_t best_d = std::numeric_limits<std::size_t>::max();
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t d = hamming(e, db.row(seeds[c]));
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    init.mass[best] += 1.0;
    for (std::size_t a = 0; a < e.size(); ++a) init.counts[best][schema.bool_id(a, e[a])] += 1.0;
  }
  m_step(init, schema, cfg.smoothing, m);

  for (std::size_t it = 0; it < cfg.em_iters; ++it) {
    const Stats s = e_step(db, positives, m);
    const double objective = s.log_likelihood + log_prior_term(m, cfg.smoothing);
    if (!m.objective.empty()) {
      const double prev = m.objective.back();
      if (objective < prev - 1e-9 * std::max(1.0, std::abs(prev)))
        throw Error("EM objective decreased at iteration " + std::to_string(it));
    }
    m.objective.push_back(objective);
    if (it + 1 < cfg.em_iters) m_step(s, schema, cfg.smoothing, m);
  }
  return m;
}

ProbCircuit compile_mixture(const Mixture& m, const Schema& schema) {
  if (m.prior.empty() || schema.size() == 0)
    throw InputError("cannot compile a mixture without components or variables");
  PcBuilder b;
  std::vector<NodeId> components;
  for (std::size_t c = 0; c < m.prior.size(); ++c) {
    std::vector<NodeId> var_sums;
    for (std::size_t a = 0; a < schema.size(); ++a) {
      const std::size_t card = schema.cardinality(a);
      std::vector<NodeId> value_products;
      for (std::size_t v = 0; v < card; ++v) {
        std::vector<NodeId> lits;
        for (std::size_t j = 0; j < card; ++j)
          if (j != v) lits.push_back(b.input(schema.bool_id(a, j), false));
        lits.push_back(b.input(schema.bool_id(a, v), true));
        value_products.push_back(b.product(std::move(lits)));
      }
      var_sums.push_back(b.sum(std::move(value_products), m.cpt[c][a]));
    }
    components.push_back(b.product(std::move(var_sums)));
  }
  const NodeId root = b.sum(std::move(components), m.prior);
  return std::move(b).build(root);
}

ProbCircuit learn_mixture(const Database& db, const ExampleSet& positives,
                          const MixtureConfig& cfg, std::vector<std::string>* warnings) {
  Mixture m = fit_mixture(db, positives, cfg);
  if (warnings) warnings->insert(warnings->end(), m.warnings.begin(), m.warnings.end());
  return compile_mixture(m, db.schema());
}

}  // namespace putput
