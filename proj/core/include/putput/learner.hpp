#pragma once

#include <putput/circuit.hpp>
#include <putput/data.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace putput {

struct MixtureConfig {
  std::size_t k = 8;
  std::size_t em_iters = 50;
  // Laplace pseudo-count added to every categorical cell and mixture weight.
  double smoothing = 1.0;
  std::uint64_t seed = 0;
};

// A mixture of fully factorized categoricals over a schema's variables.
struct Mixture {
  std::vector<double> prior;                          // [component]
  std::vector<std::vector<std::vector<double>>> cpt;  // [component][variable][value]
  // Penalized log-likelihood of the training rows after each EM iteration.
  std::vector<double> objective;
  std::vector<std::string> warnings;
};

// MAP EM with a symmetric Dirichlet prior whose pseudo-count is
// cfg.smoothing. Components are seeded from k distinct training rows drawn
// with cfg.seed; the objective is checked to be non-decreasing at every
// iteration (up to rounding) and an Error is thrown otherwise.
Mixture fit_mixture(const Database& db, const ExampleSet& positives,
                    const MixtureConfig& cfg);

// Root sum over one product per component. Each component product holds one
// sum per variable whose children are value products: for value v of a
// variable with values 0..m-1 the product is (not x_j for j != v, then x_v),
// each over its own input nodes. The result is smooth and decomposable and
// every weight is strictly positive.
ProbCircuit compile_mixture(const Mixture& m, const Schema& schema);

// fit_mixture followed by compile_mixture. Warnings (clamped k) are appended
// to `warnings` when given.
ProbCircuit learn_mixture(const Database& db, const ExampleSet& positives,
                          const MixtureConfig& cfg,
                          std::vector<std::string>* warnings = nullptr);

}  // namespace putput
