#pragma once

#include "optexact/dist.hpp"

#include <boost/dynamic_bitset.hpp>

#include <cstdint>
#include <string>

namespace optexact {

using Mask = boost::dynamic_bitset<std::uint64_t>;

// Componentwise dominance between support points; both sets include the
// point itself. up[i] holds every j with t_j >= t_i, down[i] every j with
// t_j <= t_i.
struct DominanceStructure {
  std::vector<Mask> up;
  std::vector<Mask> down;
};
DominanceStructure dominance(const JointDistribution& dist);

struct RejectionRegion {
  Mask members;
  BigInt weight;          // summed null weight of the members
  std::size_t size = 0;
  double alt_power = 0.0; // summed alternative mass; meaningful iff dist.has_alt
};
RejectionRegion make_region(const JointDistribution& dist, const Mask& members);

// Checks the defining conditions of a rejection region: exact level at most
// alpha, and closure under dominance within the alive set.
struct ValidityReport {
  bool ok = true;
  std::string violation;
};
ValidityReport check_region(const JointDistribution& dist, const DominanceStructure& dom,
                            const Mask& members, const BigRat& alpha,
                            const Mask* alive = nullptr);

enum class ObjectiveKind { Alpha, Area, Power };

// Primary criterion plus optional lexicographic refinements, applied in
// order among regions tied on everything before them.
struct Objective {
  ObjectiveKind primary = ObjectiveKind::Alpha;
  std::vector<ObjectiveKind> lex_tail;
};

BigRat evaluate_alpha(const JointDistribution& dist, const Mask& members);
std::size_t evaluate_area(const Mask& members);
double evaluate_power(const JointDistribution& dist, const Mask& members);

// Local p-value induced by a nested family of regions grown/shrunk around
// the given region one admissible point at a time.
struct RegionPValue {
  BigRat p;
  bool grown = false;              // observed point was outside the region
  bool below_alpha_outside = false; // p <= alpha although the region does not reject
};
RegionPValue region_p_value(const JointDistribution& dist, const DominanceStructure& dom,
                            const Mask& region, const StatisticVector& t_obs, const BigRat& alpha,
                            const Mask* alive = nullptr);

}  // namespace optexact
