#pragma once

#include "optexact/bonf.hpp"
#include "optexact/cells.hpp"
#include "optexact/search.hpp"

#include <cstdint>
#include <map>

namespace optexact {

enum class MethodKind {
  OptimalAlpha,
  OptimalArea,
  OptimalPower,
  GreedyRegion,
  BonfUnweighted,
  BonfHkt,
  BonfWestfallTroendle,
  BonfOptimalAlpha,
  BonfOptimalPower,
  BonfGreedy,
  MinP,
};

// Methods whose intersection tests act on the joint support rather than on
// per-endpoint boundaries.
bool is_joint_method(MethodKind kind);
const char* method_name(MethodKind kind);
MethodKind method_from_name(const std::string& name);

// Assumed treatment and control success rates with a common pairwise
// correlation; resolves to joint cell probabilities for power objectives.
struct AlternativeSpec {
  std::vector<double> rates_trt;
  std::vector<double> rates_ctr;
  double rho = 0.0;

  bool empty() const { return rates_trt.empty(); }
  void validate(int k) const;
  CellProbabilities cells_trt() const { return cells_from_marginals(rates_trt, rho); }
  CellProbabilities cells_ctr() const { return cells_from_marginals(rates_ctr, rho); }
  // Per-endpoint marginal odds ratios, treatment over control.
  std::vector<double> odds_ratios() const;
};

enum class ConsonanceMode {
  None,
  // Remove the block where no single endpoint would reject from the joint
  // search space; defined for exactly two endpoints.
  JointK2,
  // Cap subset boundaries by the minima over all computed supersets.
  BonferroniMonotone,
};

struct MethodSpec {
  MethodKind kind = MethodKind::OptimalAlpha;
  AlternativeSpec alt;                  // required by the power objectives
  ConsonanceMode consonance = ConsonanceMode::None;
  std::vector<ObjectiveKind> lex_tail;  // joint optimizers only
  std::string label;                    // free-form; defaults to the grammar name
};
std::string method_label(const MethodSpec& method);

// Structural checks: power objectives need an assumed alternative, consonance
// modes apply only to compatible methods and endpoint counts, lexicographic
// refinements only to the joint optimizing methods. Throws
// std::invalid_argument with a specific message otherwise.
void validate_method_spec(const MethodSpec& method, int k);

struct SubsetOutcome {
  std::vector<int> members;  // endpoint indices, 0-based, increasing
  bool rejected = false;
  BigRat p_value = 1;
  bool p_below_alpha_outside = false;  // p within alpha yet the test does not reject
  bool confirmed = true;               // optimality confirmed (joint searches)
  std::uint64_t iterations = 0;
};

struct ClosedTestReport {
  BigRat alpha;
  StatisticVector observed;          // per endpoint
  std::vector<SubsetOutcome> subsets;  // decreasing size, lexicographic within a size
  std::vector<bool> rejected;          // per endpoint, closure decision
  std::vector<BigRat> adjusted_p;      // max local p over covering subsets
  BigRat global_p = 1;
  bool all_confirmed = true;
};

struct ClosedTestOptions {
  std::uint64_t max_iterations = kDefaultIterationCap;
  long long support_limit = kDefaultSupportLimit;
  bool compute_p_values = true;
};

// Runs the full closed family of intersection tests for the chosen method
// and combines them: an endpoint is rejected when every subset containing it
// is rejected at level alpha.
ClosedTestReport closed_test(const CrossTable& table, const MethodSpec& method,
                             const BigRat& alpha, const ClosedTestOptions& options = {});

// Block of joint support points at which neither marginal test would reject
// at level alpha on its own; removing it from the search space makes a
// two-endpoint joint region consonant.
Mask consonance_forbidden_block(const JointDistribution& dist,
                                const std::vector<MarginalTest>& tests, const BigRat& alpha);

// Critical boundaries of the subset test for a boundary-based method,
// honouring the method's consonance mode (subset boundaries capped by the
// minima over supersets). tests covers all endpoints; J selects the subset.
// memo caches by subset bitmask and must only be reused across calls that
// share tests and level.
CriticalBoundaries subset_boundaries(const std::vector<MarginalTest>& tests,
                                     const MethodSpec& method, const std::vector<int>& J,
                                     const BigRat& level,
                                     std::map<unsigned, CriticalBoundaries>& memo);

}  // namespace optexact
