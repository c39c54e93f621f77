#pragma once

#include "optexact/dist.hpp"
#include "optexact/region.hpp"

namespace optexact {

// Exact distribution of one endpoint's success count given the margins, with
// upper tails both under the null and under a noncentral alternative.
struct MarginalTest {
  long long lo = 0, hi = -1;      // support bounds of the count
  std::vector<BigRat> pmf;        // indexed t - lo
  std::vector<BigRat> tail;       // S(t) = P(T >= t), indexed t - lo
  std::vector<double> log_weight; // log null weights, for noncentral tails

  // Null upper tail, extended by S = 1 below and S = 0 above the support.
  BigRat S(long long c) const;
  const BigRat& pmf_at(long long t) const;
  BigRat alpha_min() const { return tail.back(); }  // smallest attainable tail

  // Upper tail under the noncentral distribution tilted by the given odds
  // ratio; this is the per-endpoint power term of boundary optimization.
  double alt_tail(long long c, double odds_ratio) const;
};
MarginalTest marginal_test(const MarginVector& m, int endpoint);

// Per-endpoint critical values; an endpoint with c above its support maximum
// is untested and contributes nothing to the spent level.
struct CriticalBoundaries {
  std::vector<long long> c;
  std::vector<long long> hi;          // support maxima, aligned with c
  std::vector<BigRat> contribution;   // S_i(c_i); zero when untested

  BigRat sum() const;
  bool tested(std::size_t i) const { return c[i] <= hi[i]; }
  bool rejects(const StatisticVector& t) const;
};

enum class BonfObjectiveKind { AlphaSum, PowerSum };
struct BonfObjective {
  BonfObjectiveKind kind = BonfObjectiveKind::AlphaSum;
  std::vector<double> odds;  // per-endpoint odds ratios, PowerSum only
};

// Classic equal-split boundaries: c_i is the smallest value with
// S_i(c_i) <= alpha / k.
CriticalBoundaries bonferroni_unweighted(const std::vector<MarginalTest>& tests,
                                         const BigRat& alpha);

// Data-adaptive refinement of the equal split that exploits the discreteness
// of the attainable marginal levels.
CriticalBoundaries bonferroni_hkt(const std::vector<MarginalTest>& tests, const BigRat& alpha);

// Smallest common critical value whose summed marginal tails stay within
// alpha.
CriticalBoundaries westfall_troendle(const std::vector<MarginalTest>& tests, const BigRat& alpha);

// Exhaustively maximizes the objective over all per-endpoint boundary
// combinations subject to sum of spent levels <= alpha; ties prefer the
// smallest boundary sum, then the lexicographically smallest vector.
// Optional caps bound each boundary from above (used for consonance).
CriticalBoundaries optimize_boundaries(const std::vector<MarginalTest>& tests,
                                       const BonfObjective& objective, const BigRat& alpha,
                                       const std::vector<long long>* caps = nullptr);

// Lowers one boundary at a time, always the step with the smallest exact
// probability increment (ties: lowest endpoint index), while the summed
// spent level stays within alpha.
CriticalBoundaries greedy_boundaries(const std::vector<MarginalTest>& tests, const BigRat& alpha,
                                     const std::vector<long long>* caps = nullptr);

// Boundary optimization as a 0/1 integer program in LP text format: one-hot
// rows per endpoint plus the spent-level knapsack with exact integer weights.
std::string export_bonf_ilp(const std::vector<MarginalTest>& tests, const BonfObjective& objective,
                            const BigRat& alpha);

// Region of the joint support rejected by per-endpoint boundaries.
Mask boundary_region_mask(const JointDistribution& dist, const std::vector<long long>& c);

// Smallest cutoff whose exact tail stays within the budget, or hi + 1 when
// even the largest attainable cutoff exceeds it. At budget alpha this is the
// critical value of the endpoint's own one-sided exact test.
long long smallest_boundary(const MarginalTest& test, const BigRat& budget);

// Rejection rule based on the smallest marginal tail: the cutoff is the
// largest attainable value of min_i S_i(t_i) whose induced region keeps the
// exact joint level within alpha.
struct MinPResult {
  BigRat q_star;  // zero when no cutoff is admissible
  std::vector<long long> thresholds;
  Mask members;
};
MinPResult minp_region(const JointDistribution& dist, const std::vector<MarginalTest>& tests,
                       const BigRat& alpha);

// Exact level of the min-tail region grown to just include the observation;
// this is the local p-value of the min-tail test.
BigRat minp_observed_level(const JointDistribution& dist, const std::vector<MarginalTest>& tests,
                           const StatisticVector& t_obs);

}  // namespace optexact
