#include "optexact/region.hpp"

#include <algorithm>
#include <sstream>

namespace optexact {

namespace {

bool dominates(const StatisticVector& a, const StatisticVector& b) {
  for (std::size_t e = 0; e < a.size(); ++e)
    if (a[e] < b[e]) return false;
  return true;
}

std::string point_string(const StatisticVector& t) {
  std::ostringstream os;
  os << '(';
  for (std::size_t e = 0; e < t.size(); ++e) os << (e ? "," : "") << t[e];
  os << ')';
  return os.str();
}

Mask all_mask(std::size_t n) {
  Mask m(n);
  m.set();
  return m;
}

}  // namespace

DominanceStructure dominance(const JointDistribution& dist) {
  const auto n = static_cast<std::size_t>(dist.size());
  DominanceStructure dom;
  dom.up.assign(n, Mask(n));
  dom.down.assign(n, Mask(n));
  for (std::size_t i = 0; i < n; ++i) {
    dom.up[i].set(i);
    dom.down[i].set(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dominates(dist.points[j].t, dist.points[i].t)) {
        dom.up[i].set(j);
        dom.down[j].set(i);
      }
      if (dominates(dist.points[i].t, dist.points[j].t)) {
        dom.down[i].set(j);
        dom.up[j].set(i);
      }
    }
  }
  return dom;
}

RejectionRegion make_region(const JointDistribution& dist, const Mask& members) {
  RejectionRegion region;
  region.members = members;
  region.size = members.count();
  for (auto i = members.find_first(); i != Mask::npos; i = members.find_next(i)) {
    region.weight += dist.points[i].weight;
    region.alt_power += dist.points[i].alt_mass;
  }
  return region;
}

ValidityReport check_region(const JointDistribution& dist, const DominanceStructure& dom,
                            const Mask& members, const BigRat& alpha, const Mask* alive) {
  ValidityReport report;
  const Mask live = alive ? *alive : all_mask(static_cast<std::size_t>(dist.size()));
  if ((members & ~live).any()) {
    report.ok = false;
    report.violation = "region contains points outside the admissible set";
    return report;
  }

  BigInt weight = 0;
  for (auto i = members.find_first(); i != Mask::npos; i = members.find_next(i))
    weight += dist.points[i].weight;
  if (dist.level(weight) > alpha) {
    report.ok = false;
    report.violation = "exact level " + rational_string(dist.level(weight)) +
                       " exceeds the nominal level " + rational_string(alpha);
    return report;
  }

  for (auto i = members.find_first(); i != Mask::npos; i = members.find_next(i)) {
    const Mask missing = (dom.up[i] & live) & ~members;
    if (missing.any()) {
      const auto j = missing.find_first();
      report.ok = false;
      report.violation = "region contains " + point_string(dist.points[i].t) +
                         " but not the dominating point " + point_string(dist.points[j].t);
      return report;
    }
  }
  return report;
}

BigRat evaluate_alpha(const JointDistribution& dist, const Mask& members) {
  BigInt weight = 0;
  for (auto i = members.find_first(); i != Mask::npos; i = members.find_next(i))
    weight += dist.points[i].weight;
  return dist.level(weight);
}

std::size_t evaluate_area(const Mask& members) { return members.count(); }

double evaluate_power(const JointDistribution& dist, const Mask& members) {
  double mass = 0.0;
  for (auto i = members.find_first(); i != Mask::npos; i = members.find_next(i))
    mass += dist.points[i].alt_mass;
  return mass;
}

RegionPValue region_p_value(const JointDistribution& dist, const DominanceStructure& dom,
                            const Mask& region, const StatisticVector& t_obs, const BigRat& alpha,
                            const Mask* alive) {
  const auto n = static_cast<std::size_t>(dist.size());
  const Mask live = alive ? *alive : all_mask(n);
  const int obs = dist.index_of(t_obs);
  if (obs < 0) throw std::invalid_argument("observed statistic is not in the support");

  RegionPValue result;
  const auto obs_idx = static_cast<std::size_t>(obs);

  if (region.test(obs_idx)) {
    // Shrink: repeatedly drop the heaviest removable point (a member no other
    // member lies below); ties resolve to the earliest point in canonical
    // order. The p-value is the level of the smallest region still holding
    // the observation.
    Mask current = region;
    BigInt weight = 0;
    for (auto i = current.find_first(); i != Mask::npos; i = current.find_next(i))
      weight += dist.points[i].weight;
    BigRat p = dist.level(weight);
    while (current.test(obs_idx)) {
      p = dist.level(weight);
      std::size_t pick = Mask::npos;
      for (auto i = current.find_first(); i != Mask::npos; i = current.find_next(i)) {
        if ((dom.down[i] & current).count() == 1) {
          pick = i;  // points are stored heaviest-first, so the first hit wins
          break;
        }
      }
      if (pick == Mask::npos) break;
      current.reset(pick);
      weight -= dist.points[pick].weight;
    }
    result.p = p;
    return result;
  }

  result.grown = true;
  if (!live.test(obs_idx)) {
    // The observation can never be admitted (e.g. it lies in a block removed
    // for consonance), so no region of the family rejects it.
    result.p = BigRat(1);
    return result;
  }

  // Grow: repeatedly add the lightest admissible point whose strict
  // dominators are all present; ties resolve to the lexicographically
  // smallest statistic. The p-value is the level once the observation joins.
  Mask current = region & live;
  BigInt weight = 0;
  for (auto i = current.find_first(); i != Mask::npos; i = current.find_next(i))
    weight += dist.points[i].weight;
  while (!current.test(obs_idx)) {
    std::size_t pick = Mask::npos;
    for (auto i = live.find_first(); i != Mask::npos; i = live.find_next(i)) {
      if (current.test(i)) continue;
      Mask dominators = dom.up[i] & live;
      dominators.reset(i);
      if ((dominators & ~current).any()) continue;
      if (pick == Mask::npos) {
        pick = i;
        continue;
      }
      const auto& cand = dist.points[i];
      const auto& best = dist.points[pick];
      if (cand.weight < best.weight || (cand.weight == best.weight && cand.t < best.t)) pick = i;
    }
    if (pick == Mask::npos)
      throw std::logic_error("no admissible point left while growing the region family");
    current.set(pick);
    weight += dist.points[pick].weight;
  }
  result.p = dist.level(weight);
  result.below_alpha_outside = result.p <= alpha;
  return result;
}

}  // namespace optexact
