#pragma once

#include "optexact/region.hpp"

#include <cstdint>
#include <optional>

namespace optexact {

// Node-expansion budget of the branch-and-bound search; when exhausted the
// best feasible region found so far is returned and flagged unconfirmed.
inline constexpr std::uint64_t kDefaultIterationCap = 500'000;

// Two-stage reduction of the search space: step one drops points whose
// dominance cone alone exceeds the level budget; step two pins points that
// every optimal region must contain. The search then runs on v2 with the
// budget left after the forced points.
struct PreprocessResult {
  Mask v1;      // points that can belong to some region at level alpha
  Mask v2;      // v1 minus the forced points: the effective search space
  Mask forced;  // points contained in every optimal region
  BigInt forced_weight;
};
PreprocessResult preprocess(const JointDistribution& dist, const DominanceStructure& dom,
                            const BigRat& alpha, const Mask* forbidden = nullptr);

struct SearchOptions {
  std::uint64_t max_iterations = kDefaultIterationCap;
  bool use_preprocessing = true;
  const Mask* forbidden = nullptr;  // down-closed set of excluded points
};

struct OptResult {
  RejectionRegion region;
  std::uint64_t iterations = 0;
  bool confirmed_optimal = true;
  // Search-space sizes: full support, after step one, after step two.
  std::size_t support_size = 0;
  std::size_t v1_size = 0;
  std::size_t v2_size = 0;
  std::size_t forced_size = 0;
};

// Maximizes the objective over all regions satisfying the level condition at
// alpha and dominance closure; optional lexicographic refinements run as
// follow-up stages constrained to the preceding optima.
OptResult branch_and_bound(const JointDistribution& dist, const DominanceStructure& dom,
                           const Objective& objective, const BigRat& alpha,
                           const SearchOptions& options = {});

enum class GreedyOp { ArgMin, ArgMax };

// Builds a region by repeatedly admitting an addable point — one whose strict
// dominators are all present — chosen by the objective increment, while the
// exact level stays within alpha.
RejectionRegion greedy_region(const JointDistribution& dist, const DominanceStructure& dom,
                              ObjectiveKind objective, GreedyOp op, const BigRat& alpha,
                              const Mask* alive = nullptr);

// Splits off the cut of smallest-weight points with combined mass at most
// `threshold`, optimizes over the remainder with a correspondingly reduced
// budget, and re-admits cut points dominated into the result. The returned
// weight objective is within `threshold` of the unrestricted optimum.
OptResult small_prob_split(const JointDistribution& dist, const DominanceStructure& dom,
                           const Objective& objective, const BigRat& alpha,
                           const BigRat& threshold, const SearchOptions& options = {});

struct IlpExportOptions {
  // Exact integer weights in the level row by default; the float form scales
  // them to probabilities with 17 significant digits.
  bool integer_level_row = true;
};

// Writes the region search as a 0/1 integer program in LP text format:
// binary membership variables over the preprocessed support, one level
// knapsack row, and one dominance row per point with strict dominators.
std::string export_ilp(const JointDistribution& dist, const DominanceStructure& dom,
                       const Objective& objective, const BigRat& alpha,
                       const Mask* forbidden = nullptr, const IlpExportOptions& opts = {});

}  // namespace optexact
