#pragma once

#include "optexact/exactmath.hpp"
#include "optexact/model.hpp"

#include <iosfwd>
#include <stdexcept>

namespace optexact {

// Guard against conditional supports whose enumeration would not fit in
// memory; raised via SupportLimitError, never silently truncated.
inline constexpr long long kDefaultSupportLimit = 10'000'000;

class SupportLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-category odds of success-category probabilities, treatment over
// control; one entry per category of the (collapsed) table.
struct OddsVector {
  std::vector<double> r;
};

struct SupportPoint {
  StatisticVector t;
  BigInt weight;         // null weight; the point's null mass is weight / total_weight
  double alt_mass = 0.0; // conditional mass under the alternative, when carried
};

// Conditional joint distribution of the per-endpoint success counts given the
// pooled margins. Points are kept in canonical order: decreasing null weight,
// ties broken by lexicographically decreasing statistic.
struct JointDistribution {
  MarginVector margin;          // margins collapsed to the kept endpoints
  std::vector<int> endpoints;   // original endpoint indices, increasing
  std::vector<SupportPoint> points;
  BigInt total_weight;          // C(total, n_trt)
  bool has_alt = false;
  // log of the unnormalised alternative total sum_y prod_s C(m_s, y_s) r_s^y_s;
  // only meaningful when has_alt is set.
  double log_alt_total = 0.0;

  int k() const { return margin.k; }
  int size() const { return static_cast<int>(points.size()); }
  int index_of(const StatisticVector& t) const;  // -1 when absent
  BigRat level(const BigInt& weight_sum) const { return BigRat(weight_sum, total_weight); }

  // Built by the factory functions: point indices sorted by statistic.
  std::vector<int> lookup;
};

// All treatment-arm per-category count vectors compatible with the margins.
std::vector<std::vector<long long>> enumerate_support(const MarginVector& m,
                                                      long long limit = kDefaultSupportLimit);

JointDistribution joint_null_distribution(const MarginVector& m, const std::vector<int>& subset,
                                          long long limit = kDefaultSupportLimit);

// Alternative carried as per-category odds over the same categories as m.
JointDistribution joint_alt_distribution(const MarginVector& m, const OddsVector& odds,
                                         long long limit = kDefaultSupportLimit);

// Alternative specified by per-arm cell probabilities of the full table;
// margins and cells are collapsed onto subset before forming odds.
JointDistribution joint_alt_distribution(const MarginVector& m, const CellProbabilities& q_trt,
                                         const CellProbabilities& q_ctr,
                                         const std::vector<int>& subset,
                                         long long limit = kDefaultSupportLimit);

// Exact one-sided tail P(T_e >= threshold) of a single endpoint given the
// margins; 1 below the support, 0 above it.
BigRat marginal_tail(const MarginVector& m, int endpoint, long long threshold);

// One-sided exact p-value of endpoint e at the observed success count.
BigRat fisher_p(const MarginVector& m, int endpoint, long long observed);

void dump_distribution_json(const JointDistribution& dist, std::ostream& out);

}  // namespace optexact
