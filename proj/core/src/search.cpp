#include "optexact/search.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

namespace optexact {

namespace {

Mask full_mask(std::size_t n) {
  Mask m(n);
  m.set();
  return m;
}

BigInt level_budget(const JointDistribution& dist, const BigRat& alpha) {
  return floor_div(boost::multiprecision::numerator(alpha) * dist.total_weight,
                   boost::multiprecision::denominator(alpha));
}

BigInt mask_weight(const JointDistribution& dist, const Mask& mask) {
  BigInt w = 0;
  for (auto i = mask.find_first(); i != Mask::npos; i = mask.find_next(i))
    w += dist.points[i].weight;
  return w;
}

void check_alpha(const BigRat& alpha) {
  if (alpha < 0 || alpha > 1)
    throw std::invalid_argument("significance level must lie in [0, 1]");
}

// A later stage of a lexicographic search must not fall below the optimum of
// an earlier stage; float stages get a small relative tolerance band.
struct ExactFloor {
  std::vector<BigInt> contrib;
  BigInt threshold;
};
struct FloatFloor {
  std::vector<double> contrib;
  double threshold;
};

template <typename Value>
struct Node {
  Mask in, out;
  BigInt weight_in;
  Value value_in{};
  std::size_t depth = 0;  // number of decided points
  std::uint64_t seq = 0;
};

template <typename Value>
struct NodeOrder {
  bool operator()(const Node<Value>& a, const Node<Value>& b) const {
    if (a.value_in != b.value_in) return a.value_in < b.value_in;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.seq > b.seq;  // earlier insertion wins ties
  }
};

struct PhaseOutcome {
  Mask best;
  std::uint64_t iterations = 0;
  bool confirmed = true;
};

template <typename Value>
Value mask_value(const std::vector<Value>& contrib, const Mask& mask) {
  Value v{};
  for (auto i = mask.find_first(); i != Mask::npos; i = mask.find_next(i))
    v += contrib[i];
  return v;
}

// Best-first branch and bound over up-closed subsets of `alive`. Nodes carry
// the committed and excluded sets; branching picks the first undecided point
// in canonical order, the include child pulls the point's dominance cone in,
// the exclude child pushes its downward cone out. The committed set of every
// node is itself a feasible region, so each include child is a candidate
// incumbent; incumbents are replaced only on strict improvement, keeping the
// first-found optimum.
template <typename Value>
PhaseOutcome run_phase(const JointDistribution& dist, const DominanceStructure& dom,
                       const Mask& alive, const std::vector<Value>& contrib,
                       const BigInt& budget, const std::vector<ExactFloor>& efloors,
                       const std::vector<FloatFloor>& ffloors, std::uint64_t max_iterations,
                       const Mask* seed) {
  PhaseOutcome outcome;
  outcome.best = Mask(static_cast<std::size_t>(dist.size()));
  if (budget < 0) return outcome;

  auto floors_ok = [&](const Mask& members) {
    for (const auto& f : efloors)
      if (mask_value(f.contrib, members) < f.threshold) return false;
    for (const auto& f : ffloors)
      if (mask_value(f.contrib, members) < f.threshold) return false;
    return true;
  };
  auto floor_bounds_ok = [&](const Mask& members, const Mask& undecided) {
    for (const auto& f : efloors)
      if (mask_value(f.contrib, members) + mask_value(f.contrib, undecided) < f.threshold)
        return false;
    for (const auto& f : ffloors)
      if (mask_value(f.contrib, members) + mask_value(f.contrib, undecided) < f.threshold)
        return false;
    return true;
  };

  bool have_best = false;
  Value best_value{};
  auto consider = [&](const Mask& members, const Value& value) {
    if (!floors_ok(members)) return;
    if (!have_best || best_value < value) {
      have_best = true;
      best_value = value;
      outcome.best = members;
    }
  };

  if (seed) consider(*seed, mask_value(contrib, *seed));
  consider(Mask(static_cast<std::size_t>(dist.size())), Value{});

  if (alive.none()) return outcome;

  std::priority_queue<Node<Value>, std::vector<Node<Value>>, NodeOrder<Value>> queue;
  std::uint64_t seq = 0;

  auto push_if_promising = [&](Mask in, Mask out, BigInt weight_in, Value value_in) {
    const Mask undecided = alive & ~in & ~out;
    if (undecided.none()) return;
    if (!floor_bounds_ok(in, undecided)) return;
    const Value upper = value_in + mask_value(contrib, undecided);
    if (have_best && !(best_value < upper)) return;
    Node<Value> node;
    node.in = std::move(in);
    node.out = std::move(out);
    node.weight_in = std::move(weight_in);
    node.value_in = std::move(value_in);
    node.depth = node.in.count() + node.out.count();
    node.seq = seq++;
    queue.push(std::move(node));
  };

  push_if_promising(Mask(static_cast<std::size_t>(dist.size())),
                    Mask(static_cast<std::size_t>(dist.size())), BigInt(0), Value{});

  while (!queue.empty()) {
    if (outcome.iterations >= max_iterations) {
      outcome.confirmed = false;
      return outcome;
    }
    Node<Value> node = queue.top();
    queue.pop();

    const Mask undecided = alive & ~node.in & ~node.out;
    const Value upper = node.value_in + mask_value(contrib, undecided);
    if (have_best && !(best_value < upper)) continue;  // stale bound
    ++outcome.iterations;

    const auto pivot = undecided.find_first();

    // Include child: the pivot joins, dragging every undecided dominator in.
    {
      const Mask added = dom.up[pivot] & undecided;
      const BigInt weight = node.weight_in + mask_weight(dist, added);
      if (weight <= budget) {
        const Mask in2 = node.in | added;
        const Value value = node.value_in + mask_value(contrib, added);
        consider(in2, value);
        push_if_promising(in2, node.out, weight, value);
      }
    }

    // Exclude child: the pivot leaves, dragging its downward cone out.
    {
      const Mask out2 = node.out | (dom.down[pivot] & undecided);
      push_if_promising(node.in, out2, node.weight_in, node.value_in);
    }
  }
  return outcome;
}

std::vector<BigInt> exact_contributions(const JointDistribution& dist, ObjectiveKind kind) {
  std::vector<BigInt> contrib(static_cast<std::size_t>(dist.size()));
  for (int i = 0; i < dist.size(); ++i)
    contrib[static_cast<std::size_t>(i)] =
        kind == ObjectiveKind::Alpha ? dist.points[static_cast<std::size_t>(i)].weight : BigInt(1);
  return contrib;
}

std::vector<double> power_contributions(const JointDistribution& dist) {
  if (!dist.has_alt)
    throw std::invalid_argument("the power objective needs a distribution with an alternative");
  std::vector<double> contrib(static_cast<std::size_t>(dist.size()));
  for (int i = 0; i < dist.size(); ++i)
    contrib[static_cast<std::size_t>(i)] = dist.points[static_cast<std::size_t>(i)].alt_mass;
  return contrib;
}

void check_forbidden(const DominanceStructure& dom, const Mask& forbidden) {
  for (auto i = forbidden.find_first(); i != Mask::npos; i = forbidden.find_next(i))
    if ((dom.down[i] & ~forbidden).any())
      throw std::invalid_argument(
          "excluded point set must be closed downward under dominance");
}

OptResult optimize_on(const JointDistribution& dist, const DominanceStructure& dom,
                      const Objective& objective, const BigRat& alpha,
                      const PreprocessResult& prep, std::uint64_t max_iterations) {
  const Mask& alive = prep.v2;
  const BigInt budget = level_budget(dist, alpha) - prep.forced_weight;

  std::vector<ObjectiveKind> stages;
  stages.push_back(objective.primary);
  for (ObjectiveKind kind : objective.lex_tail) stages.push_back(kind);

  std::vector<ExactFloor> efloors;
  std::vector<FloatFloor> ffloors;
  Mask best(static_cast<std::size_t>(dist.size()));
  const Mask* seed = nullptr;
  std::uint64_t iterations = 0;
  bool confirmed = true;

  for (ObjectiveKind kind : stages) {
    PhaseOutcome phase;
    if (kind == ObjectiveKind::Power) {
      const auto contrib = power_contributions(dist);
      phase = run_phase<double>(dist, dom, alive, contrib, budget, efloors, ffloors,
                                max_iterations, seed);
      const double reached = mask_value(contrib, phase.best);
      ffloors.push_back({contrib, reached - 1e-12 * std::max(1.0, std::abs(reached))});
    } else {
      const auto contrib = exact_contributions(dist, kind);
      phase = run_phase<BigInt>(dist, dom, alive, contrib, budget, efloors, ffloors,
                                max_iterations, seed);
      efloors.push_back({contrib, mask_value(contrib, phase.best)});
    }
    iterations += phase.iterations;
    confirmed = confirmed && phase.confirmed;
    best = phase.best;
    seed = &best;
    if (!phase.confirmed) break;  // later refinements would start from an unconfirmed base
  }

  OptResult result;
  result.region = make_region(dist, best | prep.forced);
  result.iterations = iterations;
  result.confirmed_optimal = confirmed;
  result.support_size = static_cast<std::size_t>(dist.size());
  result.v1_size = prep.v1.count();
  result.v2_size = prep.v2.count();
  result.forced_size = prep.forced.count();
  return result;
}

}  // namespace

PreprocessResult preprocess(const JointDistribution& dist, const DominanceStructure& dom,
                            const BigRat& alpha, const Mask* forbidden) {
  check_alpha(alpha);
  const auto n = static_cast<std::size_t>(dist.size());
  Mask alive0 = full_mask(n);
  if (forbidden) {
    if (forbidden->size() != n)
      throw std::invalid_argument("excluded point mask has the wrong size");
    check_forbidden(dom, *forbidden);
    alive0 &= ~*forbidden;
  }

  const BigInt budget = level_budget(dist, alpha);

  PreprocessResult prep;
  prep.v1 = Mask(n);
  for (auto i = alive0.find_first(); i != Mask::npos; i = alive0.find_next(i))
    if (mask_weight(dist, dom.up[i] & alive0) <= budget) prep.v1.set(i);

  // A point is pinned when even the largest region avoiding everything below
  // it cannot exhaust the budget without it.
  const BigInt v1_weight = mask_weight(dist, prep.v1);
  prep.forced = Mask(n);
  for (auto i = prep.v1.find_first(); i != Mask::npos; i = prep.v1.find_next(i)) {
    const BigInt bound =
        v1_weight - mask_weight(dist, dom.down[i] & prep.v1) + dist.points[i].weight;
    if (bound <= budget) prep.forced.set(i);
  }
  prep.v2 = prep.v1 & ~prep.forced;
  prep.forced_weight = mask_weight(dist, prep.forced);
  return prep;
}

OptResult branch_and_bound(const JointDistribution& dist, const DominanceStructure& dom,
                           const Objective& objective, const BigRat& alpha,
                           const SearchOptions& options) {
  check_alpha(alpha);
  const auto n = static_cast<std::size_t>(dist.size());

  PreprocessResult prep;
  if (options.use_preprocessing) {
    prep = preprocess(dist, dom, alpha, options.forbidden);
  } else {
    Mask alive0 = full_mask(n);
    if (options.forbidden) {
      if (options.forbidden->size() != n)
        throw std::invalid_argument("excluded point mask has the wrong size");
      check_forbidden(dom, *options.forbidden);
      alive0 &= ~*options.forbidden;
    }
    prep.v1 = alive0;
    prep.v2 = alive0;
    prep.forced = Mask(n);
    prep.forced_weight = 0;
  }
  return optimize_on(dist, dom, objective, alpha, prep, options.max_iterations);
}

RejectionRegion greedy_region(const JointDistribution& dist, const DominanceStructure& dom,
                              ObjectiveKind objective, GreedyOp op, const BigRat& alpha,
                              const Mask* alive_in) {
  check_alpha(alpha);
  const auto n = static_cast<std::size_t>(dist.size());
  const Mask alive = alive_in ? *alive_in : full_mask(n);
  const BigInt budget = level_budget(dist, alpha);

  std::vector<double> power;
  if (objective == ObjectiveKind::Power) power = power_contributions(dist);

  Mask region(n);
  BigInt weight = 0;
  for (;;) {
    std::size_t pick = Mask::npos;
    for (auto i = alive.find_first(); i != Mask::npos; i = alive.find_next(i)) {
      if (region.test(i)) continue;
      Mask dominators = dom.up[i] & alive;
      dominators.reset(i);
      if ((dominators & ~region).any()) continue;
      if (weight + dist.points[i].weight > budget) continue;
      if (pick == Mask::npos) {
        pick = i;
        continue;
      }
      const auto& cand = dist.points[i];
      const auto& best = dist.points[pick];
      bool better = false;
      switch (objective) {
        case ObjectiveKind::Alpha:
          if (cand.weight != best.weight)
            better = op == GreedyOp::ArgMin ? cand.weight < best.weight
                                            : cand.weight > best.weight;
          else
            better = cand.t < best.t;
          break;
        case ObjectiveKind::Area:
          // Every increment counts one, so only the lexicographic rule acts.
          better = cand.t < best.t;
          break;
        case ObjectiveKind::Power: {
          const double cv = power[i], bv = power[pick];
          if (cv != bv)
            better = op == GreedyOp::ArgMin ? cv < bv : cv > bv;
          else
            better = cand.t < best.t;
          break;
        }
      }
      if (better) pick = i;
    }
    if (pick == Mask::npos) break;
    region.set(pick);
    weight += dist.points[pick].weight;
  }
  return make_region(dist, region);
}

OptResult small_prob_split(const JointDistribution& dist, const DominanceStructure& dom,
                           const Objective& objective, const BigRat& alpha,
                           const BigRat& threshold, const SearchOptions& options) {
  check_alpha(alpha);
  if (threshold < 0 || threshold > 1)
    throw std::invalid_argument("split threshold must lie in [0, 1]");

  PreprocessResult prep = preprocess(dist, dom, alpha, options.forbidden);

  // Collect whole weight classes of v2, lightest first, while their combined
  // mass stays within the threshold; a class is never split, which keeps the
  // cut defined by a pure weight comparison.
  std::vector<std::size_t> order;
  for (auto i = prep.v2.find_first(); i != Mask::npos; i = prep.v2.find_next(i)) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dist.points[a].weight < dist.points[b].weight;
  });

  const BigInt cut_budget = floor_div(boost::multiprecision::numerator(threshold) * dist.total_weight,
                                      boost::multiprecision::denominator(threshold));
  Mask cut(static_cast<std::size_t>(dist.size()));
  BigInt cut_weight = 0;
  for (std::size_t pos = 0; pos < order.size();) {
    std::size_t end = pos;
    BigInt class_weight = 0;
    while (end < order.size() &&
           dist.points[order[end]].weight == dist.points[order[pos]].weight) {
      class_weight += dist.points[order[end]].weight;
      ++end;
    }
    if (cut_weight + class_weight > cut_budget) break;
    for (std::size_t p = pos; p < end; ++p) cut.set(order[p]);
    cut_weight += class_weight;
    pos = end;
  }

  PreprocessResult reduced = prep;
  reduced.v2 = prep.v2 & ~cut;
  // Reserve the cut's mass so re-admitted points can never break the level.
  reduced.forced_weight = prep.forced_weight + cut_weight;

  OptResult result = optimize_on(dist, dom, objective, alpha, reduced, options.max_iterations);

  // Re-admit cut points whose strict dominators already made it, repeating
  // until stable so chains within the cut fill in too.
  Mask members = result.region.members;
  const Mask alive = prep.v1;
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto i = cut.find_first(); i != Mask::npos; i = cut.find_next(i)) {
      if (members.test(i)) continue;
      Mask dominators = dom.up[i] & alive;
      dominators.reset(i);
      if ((dominators & ~members).any()) continue;
      members.set(i);
      changed = true;
    }
  }

  result.region = make_region(dist, members);
  result.v2_size = reduced.v2.count();
  return result;
}

std::string export_ilp(const JointDistribution& dist, const DominanceStructure& dom,
                       const Objective& objective, const BigRat& alpha, const Mask* forbidden,
                       const IlpExportOptions& opts) {
  check_alpha(alpha);
  if (!objective.lex_tail.empty())
    throw std::invalid_argument("only single-criterion objectives can be exported");

  const PreprocessResult prep = preprocess(dist, dom, alpha, forbidden);
  const BigInt budget = level_budget(dist, alpha) - prep.forced_weight;

  std::vector<std::size_t> vars;  // canonical order of the reduced space
  for (auto i = prep.v2.find_first(); i != Mask::npos; i = prep.v2.find_next(i)) vars.push_back(i);
  std::vector<std::size_t> var_of(static_cast<std::size_t>(dist.size()), 0);
  for (std::size_t v = 0; v < vars.size(); ++v) var_of[vars[v]] = v + 1;

  std::vector<double> power;
  if (objective.primary == ObjectiveKind::Power) power = power_contributions(dist);

  std::ostringstream out;
  out.precision(17);
  out << "\\ optimal rejection region as a 0/1 integer program\n";
  out << "\\ support points: " << vars.size() << " of " << dist.size()
      << " after preprocessing; pinned points: " << prep.forced.count() << "\n";
  out << "\\ pinned weight (add to the level row budget for the full region): "
      << prep.forced_weight.str() << "\n";
  out << "\\ total weight: " << dist.total_weight.str() << "\n";
  {
    // Objective value already secured by the pinned points; external solvers
    // must add it to recover the full-region objective.
    out << "\\ pinned objective constant: ";
    switch (objective.primary) {
      case ObjectiveKind::Alpha:
        out << prep.forced_weight.str();
        break;
      case ObjectiveKind::Area:
        out << prep.forced.count();
        break;
      case ObjectiveKind::Power: {
        double mass = 0.0;
        for (auto i = prep.forced.find_first(); i != Mask::npos; i = prep.forced.find_next(i))
          mass += power[i];
        out << mass;
        break;
      }
    }
    out << "\n";
  }
  for (std::size_t v = 0; v < vars.size(); ++v) {
    out << "\\ x" << (v + 1) << " = (";
    const auto& t = dist.points[vars[v]].t;
    for (std::size_t e = 0; e < t.size(); ++e) out << (e ? "," : "") << t[e];
    out << ")\n";
  }

  auto write_terms = [&out](const std::vector<std::string>& terms) {
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (i == 0)
        out << ' ' << terms[i];
      else
        out << (terms[i][0] == '-' ? " - " : " + ")
            << (terms[i][0] == '-' ? terms[i].substr(1) : terms[i]);
      if ((i + 1) % 8 == 0 && i + 1 < terms.size()) out << "\n ";
    }
    out << '\n';
  };

  out << "Maximize\n obj:";
  {
    std::vector<std::string> terms;
    for (std::size_t v = 0; v < vars.size(); ++v) {
      std::ostringstream term;
      term.precision(17);
      switch (objective.primary) {
        case ObjectiveKind::Alpha:
          term << dist.points[vars[v]].weight.str();
          break;
        case ObjectiveKind::Area:
          term << 1;
          break;
        case ObjectiveKind::Power:
          term << power[vars[v]];
          break;
      }
      term << " x" << (v + 1);
      terms.push_back(term.str());
    }
    out << '\n';
    write_terms(terms);
  }

  out << "Subject To\n level:\n";
  {
    std::vector<std::string> terms;
    for (std::size_t v = 0; v < vars.size(); ++v) {
      std::ostringstream term;
      term.precision(17);
      if (opts.integer_level_row)
        term << dist.points[vars[v]].weight.str();
      else
        term << to_double(BigRat(dist.points[vars[v]].weight, dist.total_weight));
      term << " x" << (v + 1);
      terms.push_back(term.str());
    }
    write_terms(terms);
    out << " <= ";
    if (opts.integer_level_row)
      out << budget.str();
    else
      out << to_double(BigRat(budget, dist.total_weight));
    out << '\n';
  }

  for (std::size_t v = 0; v < vars.size(); ++v) {
    Mask dominators = dom.up[vars[v]] & prep.v2;
    dominators.reset(vars[v]);
    if (dominators.none()) continue;
    out << " mono_x" << (v + 1) << ":\n";
    std::vector<std::string> terms;
    {
      std::ostringstream term;
      term << dominators.count() << " x" << (v + 1);
      terms.push_back(term.str());
    }
    for (auto j = dominators.find_first(); j != Mask::npos; j = dominators.find_next(j)) {
      std::ostringstream term;
      term << "-1 x" << var_of[j];
      terms.push_back(term.str());
    }
    write_terms(terms);
    out << " <= 0\n";
  }

  out << "Binary\n";
  for (std::size_t v = 0; v < vars.size(); ++v) out << " x" << (v + 1) << ((v + 1) % 10 == 0 ? "\n" : "");
  if (vars.size() % 10 != 0) out << '\n';
  out << "End\n";
  return out.str();
}

}  // namespace optexact
