#pragma once

#include "optexact/closed.hpp"

namespace optexact {

// Data-generating configuration for unconditional power: each arm samples
// response patterns from the joint cell probabilities induced by marginal
// success rates and a common pairwise correlation.
struct Scenario {
  std::string label;
  int n_trt = 0;
  int n_ctr = 0;
  std::vector<double> rates_trt;
  std::vector<double> rates_ctr;
  double rho = 0.0;

  int k() const { return static_cast<int>(rates_trt.size()); }
  void validate() const;
  CellProbabilities cells_trt() const { return cells_from_marginals(rates_trt, rho); }
  CellProbabilities cells_ctr() const { return cells_from_marginals(rates_ctr, rho); }
};

// Reads {"label", "n_trt", "n_ctr", "rates_trt", "rates_ctr", "rho"} from a
// JSON file; label and rho are optional.
Scenario read_scenario_json(const std::string& path);

struct PowerStudyConfig {
  Scenario scenario;
  std::vector<MethodSpec> methods;
  BigRat alpha{1, 40};
  std::uint64_t max_iterations = kDefaultIterationCap;
  long long support_limit = kDefaultSupportLimit;
  std::uint64_t n_sims = 2000;  // simulation only
  std::uint64_t seed = 1;       // simulation only
  int threads = 1;
};

// Rejection probabilities of one method under a scenario, with the closed
// family combined per draw: an endpoint counts as rejected only when every
// subset test containing it rejects. Exact when n_sims is zero.
struct PowerReport {
  std::string label;
  double p_global = 0.0;        // intersection of all hypotheses rejected
  double p_any = 0.0;           // at least one endpoint rejected
  double p_all = 0.0;           // every endpoint rejected
  std::vector<double> p_elem;   // per endpoint
  double confirmed_share = 1.0; // mass or draws where every search was confirmed
  std::uint64_t iter_q50 = 0;   // search-iteration quantiles across margins/draws
  std::uint64_t iter_q90 = 0;
  std::uint64_t iter_max = 0;
  std::uint64_t n_sims = 0;     // 0 for the exact evaluation
  double mc_se = 0.0;           // largest binomial standard error, 0 when exact
};

// Exact probability of each attainable pooled-margin vector under the
// scenario; the probabilities sum to one.
struct MarginCell {
  MarginVector margin;
  double probability = 0.0;
};
std::vector<MarginCell> margin_distribution(const Scenario& scenario);

// Unconditional rejection probabilities by exact enumeration over all pooled
// margin vectors; supports scenarios with one or two endpoints.
std::vector<PowerReport> exact_power(const PowerStudyConfig& config);

// Monte Carlo estimate of the same probabilities for any endpoint count.
// Identical seeds give identical results regardless of the thread count.
std::vector<PowerReport> simulate_power(const PowerStudyConfig& config);

}  // namespace optexact
