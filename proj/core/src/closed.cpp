#include "optexact/closed.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace optexact {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

unsigned bits_of(const std::vector<int>& J) {
  unsigned mask = 0;
  for (int e : J) mask |= 1u << e;
  return mask;
}

// All non-empty endpoint subsets, largest first, lexicographic by index list
// within a size.
std::vector<std::vector<int>> closure_subsets(int k) {
  std::vector<std::vector<int>> by_mask;
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<int> J;
    for (int e = 0; e < k; ++e)
      if (mask & (1u << e)) J.push_back(e);
    by_mask.push_back(std::move(J));
  }
  std::stable_sort(by_mask.begin(), by_mask.end(),
                   [](const std::vector<int>& a, const std::vector<int>& b) {
                     if (a.size() != b.size()) return a.size() > b.size();
                     return a < b;
                   });
  return by_mask;
}

StatisticVector pick(const StatisticVector& observed, const std::vector<int>& J) {
  StatisticVector t;
  t.reserve(J.size());
  for (int e : J) t.push_back(observed[static_cast<std::size_t>(e)]);
  return t;
}

bool is_optimizing_bonf(MethodKind kind) {
  return kind == MethodKind::BonfOptimalAlpha || kind == MethodKind::BonfOptimalPower ||
         kind == MethodKind::BonfGreedy;
}

// --- Bonferroni-family boundary computation with optional consonance caps ---

struct BonfSetup {
  const std::vector<MarginalTest>* tests = nullptr;  // all k endpoints
  MethodKind kind = MethodKind::BonfUnweighted;
  bool consonant = false;
  std::vector<double> odds;  // all k endpoints; power objective only
  int k = 0;
};

CriticalBoundaries boundaries_for(const BonfSetup& setup, const std::vector<int>& J,
                                  const BigRat& level,
                                  std::map<unsigned, CriticalBoundaries>& memo) {
  const unsigned mask = bits_of(J);
  if (auto it = memo.find(mask); it != memo.end()) return it->second;

  std::vector<MarginalTest> tests;
  for (int e : J) tests.push_back((*setup.tests)[static_cast<std::size_t>(e)]);

  std::vector<long long> caps;
  const std::vector<long long>* caps_ptr = nullptr;
  if (setup.consonant && is_optimizing_bonf(setup.kind) &&
      static_cast<int>(J.size()) < setup.k) {
    caps.assign(J.size(), 0);
    for (std::size_t pos = 0; pos < J.size(); ++pos)
      caps[pos] = tests[pos].hi + 1;
    for (unsigned sup = mask + 1; sup < (1u << setup.k); ++sup) {
      if ((sup & mask) != mask || sup == mask) continue;
      std::vector<int> Jsup;
      for (int e = 0; e < setup.k; ++e)
        if (sup & (1u << e)) Jsup.push_back(e);
      const CriticalBoundaries upper = boundaries_for(setup, Jsup, level, memo);
      for (std::size_t pos = 0; pos < J.size(); ++pos) {
        const auto it = std::find(Jsup.begin(), Jsup.end(), J[pos]);
        const auto sup_pos = static_cast<std::size_t>(it - Jsup.begin());
        caps[pos] = std::min(caps[pos], upper.c[sup_pos]);
      }
    }
    caps_ptr = &caps;
  }

  CriticalBoundaries result;
  switch (setup.kind) {
    case MethodKind::BonfUnweighted:
      result = bonferroni_unweighted(tests, level);
      break;
    case MethodKind::BonfHkt:
      result = bonferroni_hkt(tests, level);
      break;
    case MethodKind::BonfWestfallTroendle:
      result = westfall_troendle(tests, level);
      break;
    case MethodKind::BonfOptimalAlpha:
    case MethodKind::BonfOptimalPower: {
      BonfObjective objective;
      objective.kind = setup.kind == MethodKind::BonfOptimalAlpha ? BonfObjectiveKind::AlphaSum
                                                                  : BonfObjectiveKind::PowerSum;
      if (objective.kind == BonfObjectiveKind::PowerSum)
        for (int e : J) objective.odds.push_back(setup.odds[static_cast<std::size_t>(e)]);
      result = optimize_boundaries(tests, objective, level, caps_ptr);
      break;
    }
    case MethodKind::BonfGreedy:
      result = greedy_boundaries(tests, level, caps_ptr);
      break;
    default:
      throw std::logic_error("not a boundary-based method");
  }
  memo.emplace(mask, result);
  return result;
}

// Smallest attainable level at which the boundary method rejects the
// observation; scans the finite grid of attainable spent-level sums.
BigRat boundary_method_p(const BonfSetup& setup, const std::vector<int>& J,
                         const StatisticVector& t_J) {
  std::vector<MarginalTest> tests;
  for (int e : J) tests.push_back((*setup.tests)[static_cast<std::size_t>(e)]);

  std::set<BigRat> grid;
  std::vector<std::vector<BigRat>> spends(J.size());
  for (std::size_t pos = 0; pos < J.size(); ++pos) {
    spends[pos].push_back(BigRat(0));  // untested
    for (long long c = tests[pos].lo; c <= tests[pos].hi; ++c)
      spends[pos].push_back(tests[pos].S(c));
  }
  std::vector<std::size_t> idx(J.size(), 0);
  auto rec = [&](auto&& self, std::size_t pos, const BigRat& sum) -> void {
    if (sum > 1) return;
    if (pos == J.size()) {
      if (sum > 0) grid.insert(sum);
      return;
    }
    for (const auto& s : spends[pos]) self(self, pos + 1, sum + s);
  };
  rec(rec, 0, BigRat(0));

  for (const auto& level : grid) {
    std::map<unsigned, CriticalBoundaries> memo;
    const CriticalBoundaries bounds = boundaries_for(setup, J, level, memo);
    if (bounds.rejects(t_J)) return level;
  }
  return BigRat(1);
}

}  // namespace

bool is_joint_method(MethodKind kind) {
  switch (kind) {
    case MethodKind::OptimalAlpha:
    case MethodKind::OptimalArea:
    case MethodKind::OptimalPower:
    case MethodKind::GreedyRegion:
      return true;
    default:
      return false;
  }
}

const char* method_name(MethodKind kind) {
  switch (kind) {
    case MethodKind::OptimalAlpha: return "optimal-alpha";
    case MethodKind::OptimalArea: return "optimal-area";
    case MethodKind::OptimalPower: return "optimal-power";
    case MethodKind::GreedyRegion: return "greedy";
    case MethodKind::BonfUnweighted: return "bonf-unweighted";
    case MethodKind::BonfHkt: return "bonf-hkt";
    case MethodKind::BonfWestfallTroendle: return "bonf-wt";
    case MethodKind::BonfOptimalAlpha: return "bonf-optimal-alpha";
    case MethodKind::BonfOptimalPower: return "bonf-optimal-power";
    case MethodKind::BonfGreedy: return "bonf-greedy";
    case MethodKind::MinP: return "minp";
  }
  return "unknown";
}

MethodKind method_from_name(const std::string& name) {
  static const std::map<std::string, MethodKind> lookup = {
      {"optimal-alpha", MethodKind::OptimalAlpha},
      {"optimal-area", MethodKind::OptimalArea},
      {"optimal-power", MethodKind::OptimalPower},
      {"greedy", MethodKind::GreedyRegion},
      {"bonf-unweighted", MethodKind::BonfUnweighted},
      {"bonf-hkt", MethodKind::BonfHkt},
      {"bonf-wt", MethodKind::BonfWestfallTroendle},
      {"bonf-optimal-alpha", MethodKind::BonfOptimalAlpha},
      {"bonf-optimal-power", MethodKind::BonfOptimalPower},
      {"bonf-greedy", MethodKind::BonfGreedy},
      {"minp", MethodKind::MinP},
  };
  const auto it = lookup.find(name);
  if (it == lookup.end()) throw std::invalid_argument("unknown method '" + name + "'");
  return it->second;
}

void AlternativeSpec::validate(int k) const {
  require(static_cast<int>(rates_trt.size()) == k && static_cast<int>(rates_ctr.size()) == k,
          "the assumed alternative must give one rate pair per endpoint");
  for (double p : rates_trt)
    require(p > 0.0 && p < 1.0, "assumed rates must lie strictly between 0 and 1");
  for (double p : rates_ctr)
    require(p > 0.0 && p < 1.0, "assumed rates must lie strictly between 0 and 1");
}

std::vector<double> AlternativeSpec::odds_ratios() const {
  std::vector<double> odds;
  odds.reserve(rates_trt.size());
  for (std::size_t e = 0; e < rates_trt.size(); ++e) {
    const double pt = rates_trt[e], pc = rates_ctr[e];
    odds.push_back((pt * (1.0 - pc)) / ((1.0 - pt) * pc));
  }
  return odds;
}

std::string method_label(const MethodSpec& method) {
  if (!method.label.empty()) return method.label;
  std::string label = method_name(method.kind);
  if (method.consonance != ConsonanceMode::None) label += "+consonant";
  return label;
}

void validate_method_spec(const MethodSpec& method, int k) {
  const bool needs_alt =
      method.kind == MethodKind::OptimalPower || method.kind == MethodKind::BonfOptimalPower;
  if (needs_alt) {
    require(!method.alt.empty(),
            std::string(method_name(method.kind)) + " needs an assumed alternative");
    method.alt.validate(k);
  }
  if (!method.lex_tail.empty())
    require(method.kind == MethodKind::OptimalAlpha || method.kind == MethodKind::OptimalArea ||
                method.kind == MethodKind::OptimalPower,
            "lexicographic refinements apply to the joint optimizing methods only");
  switch (method.consonance) {
    case ConsonanceMode::None:
      break;
    case ConsonanceMode::JointK2:
      require(is_joint_method(method.kind),
              "joint consonance applies to joint region methods only");
      require(k == 2, "joint consonance is defined for exactly two endpoints");
      break;
    case ConsonanceMode::BonferroniMonotone:
      require(method.kind == MethodKind::BonfUnweighted || is_optimizing_bonf(method.kind),
              "boundary consonance applies to the Bonferroni-type constructions only");
      break;
  }
}

CriticalBoundaries subset_boundaries(const std::vector<MarginalTest>& tests,
                                     const MethodSpec& method, const std::vector<int>& J,
                                     const BigRat& level,
                                     std::map<unsigned, CriticalBoundaries>& memo) {
  BonfSetup setup;
  setup.tests = &tests;
  setup.kind = method.kind;
  setup.consonant = method.consonance == ConsonanceMode::BonferroniMonotone;
  if (method.kind == MethodKind::BonfOptimalPower) setup.odds = method.alt.odds_ratios();
  setup.k = static_cast<int>(tests.size());
  return boundaries_for(setup, J, level, memo);
}

Mask consonance_forbidden_block(const JointDistribution& dist,
                                const std::vector<MarginalTest>& tests, const BigRat& alpha) {
  require(tests.size() == static_cast<std::size_t>(dist.k()),
          "one marginal test per endpoint is required");
  std::vector<long long> c;
  for (const auto& test : tests) c.push_back(smallest_boundary(test, alpha));

  Mask block(static_cast<std::size_t>(dist.size()));
  for (int i = 0; i < dist.size(); ++i) {
    const auto& t = dist.points[static_cast<std::size_t>(i)].t;
    bool inside = true;
    for (std::size_t e = 0; e < c.size(); ++e)
      if (t[e] >= c[e]) {
        inside = false;
        break;
      }
    if (inside) block.set(static_cast<std::size_t>(i));
  }
  return block;
}

ClosedTestReport closed_test(const CrossTable& table, const MethodSpec& method,
                             const BigRat& alpha, const ClosedTestOptions& options) {
  table.validate();
  require(alpha >= 0 && alpha <= 1, "significance level must lie in [0, 1]");
  const int k = table.k;
  validate_method_spec(method, k);
  const bool needs_alt =
      method.kind == MethodKind::OptimalPower || method.kind == MethodKind::BonfOptimalPower;

  const MarginVector M = margins(table);
  std::vector<int> all(static_cast<std::size_t>(k));
  for (int e = 0; e < k; ++e) all[static_cast<std::size_t>(e)] = e;

  ClosedTestReport report;
  report.alpha = alpha;
  report.observed = project(table.trt, k, all);

  std::vector<MarginalTest> tests;
  for (int e = 0; e < k; ++e) tests.push_back(marginal_test(M, e));

  CellProbabilities cells_t, cells_c;
  std::vector<double> odds;
  if (needs_alt) {
    cells_t = method.alt.cells_trt();
    cells_c = method.alt.cells_ctr();
    odds = method.alt.odds_ratios();
  }

  BonfSetup bonf_setup;
  bonf_setup.tests = &tests;
  bonf_setup.kind = method.kind;
  bonf_setup.consonant = method.consonance == ConsonanceMode::BonferroniMonotone;
  bonf_setup.odds = odds;
  bonf_setup.k = k;
  std::map<unsigned, CriticalBoundaries> bonf_memo;

  for (const auto& J : closure_subsets(k)) {
    SubsetOutcome outcome;
    outcome.members = J;
    const StatisticVector t_J = pick(report.observed, J);

    if (is_joint_method(method.kind)) {
      const JointDistribution dist =
          method.kind == MethodKind::OptimalPower
              ? joint_alt_distribution(M, cells_t, cells_c, J, options.support_limit)
              : joint_null_distribution(M, J, options.support_limit);
      const DominanceStructure dom = dominance(dist);

      Mask forbidden;
      const Mask* forbidden_ptr = nullptr;
      Mask alive(static_cast<std::size_t>(dist.size()));
      alive.set();
      if (method.consonance == ConsonanceMode::JointK2 && J.size() == 2) {
        std::vector<MarginalTest> pair_tests{tests[static_cast<std::size_t>(J[0])],
                                             tests[static_cast<std::size_t>(J[1])]};
        forbidden = consonance_forbidden_block(dist, pair_tests, alpha);
        forbidden_ptr = &forbidden;
        alive &= ~forbidden;
      }

      Mask members;
      if (method.kind == MethodKind::GreedyRegion) {
        members = greedy_region(dist, dom, ObjectiveKind::Alpha, GreedyOp::ArgMin, alpha,
                                forbidden_ptr ? &alive : nullptr)
                      .members;
      } else {
        Objective objective;
        objective.primary = method.kind == MethodKind::OptimalAlpha ? ObjectiveKind::Alpha
                            : method.kind == MethodKind::OptimalArea ? ObjectiveKind::Area
                                                                     : ObjectiveKind::Power;
        objective.lex_tail = method.lex_tail;
        SearchOptions search;
        search.max_iterations = options.max_iterations;
        search.forbidden = forbidden_ptr;
        const OptResult result = branch_and_bound(dist, dom, objective, alpha, search);
        members = result.region.members;
        outcome.iterations = result.iterations;
        outcome.confirmed = result.confirmed_optimal;
      }

      const int obs_idx = dist.index_of(t_J);
      require(obs_idx >= 0, "observed statistic missing from the joint support");
      outcome.rejected = members.test(static_cast<std::size_t>(obs_idx));
      if (options.compute_p_values) {
        const RegionPValue p = region_p_value(dist, dom, members, t_J, alpha,
                                              forbidden_ptr ? &alive : nullptr);
        outcome.p_value = p.p;
        outcome.p_below_alpha_outside = p.below_alpha_outside;
      }
    } else if (method.kind == MethodKind::MinP) {
      const JointDistribution dist = joint_null_distribution(M, J, options.support_limit);
      std::vector<MarginalTest> tests_J;
      for (int e : J) tests_J.push_back(tests[static_cast<std::size_t>(e)]);
      const MinPResult mp = minp_region(dist, tests_J, alpha);
      const int obs_idx = dist.index_of(t_J);
      require(obs_idx >= 0, "observed statistic missing from the joint support");
      outcome.rejected = mp.members.test(static_cast<std::size_t>(obs_idx));
      if (options.compute_p_values) {
        outcome.p_value = minp_observed_level(dist, tests_J, t_J);
        outcome.p_below_alpha_outside = outcome.p_value <= alpha && !outcome.rejected;
      }
    } else {
      const CriticalBoundaries bounds = boundaries_for(bonf_setup, J, alpha, bonf_memo);
      outcome.rejected = bounds.rejects(t_J);
      if (options.compute_p_values) {
        std::vector<MarginalTest> tests_J;
        for (int e : J) tests_J.push_back(tests[static_cast<std::size_t>(e)]);
        switch (method.kind) {
          case MethodKind::BonfUnweighted: {
            BigRat mn = tests_J[0].S(t_J[0]);
            for (std::size_t pos = 1; pos < tests_J.size(); ++pos)
              mn = std::min(mn, tests_J[pos].S(t_J[pos]));
            const BigRat scaled = mn * static_cast<int>(J.size());
            outcome.p_value = std::min(BigRat(1), scaled);
            break;
          }
          case MethodKind::BonfHkt: {
            // Smallest spent level m * S at which the discreteness-aware rule
            // fires; mirrors the boundary construction.
            std::vector<BigRat> alpha_min;
            for (const auto& t : tests_J) alpha_min.push_back(t.alpha_min());
            const int kj = static_cast<int>(J.size());
            auto divisor = [&](const BigRat& x) {
              for (int m = 1; m <= kj; ++m) {
                int attainable = 0;
                for (const auto& a : alpha_min)
                  if (a * m <= x) ++attainable;
                if (attainable <= m) return m;
              }
              return kj;
            };
            BigRat best = 1;
            for (std::size_t pos = 0; pos < tests_J.size(); ++pos) {
              const BigRat S = tests_J[pos].S(t_J[pos]);
              for (int m = 1; m <= kj; ++m) {
                const BigRat spent = S * m;
                if (spent <= 1 && divisor(spent) <= m) best = std::min(best, spent);
              }
            }
            outcome.p_value = best;
            break;
          }
          case MethodKind::BonfWestfallTroendle: {
            long long max_t = t_J[0];
            for (int v : t_J) max_t = std::max<long long>(max_t, v);
            BigRat sum = 0;
            for (const auto& t : tests_J) sum += t.S(max_t);
            outcome.p_value = std::min(BigRat(1), sum);
            break;
          }
          default:
            outcome.p_value = boundary_method_p(bonf_setup, J, t_J);
        }
        outcome.p_below_alpha_outside = outcome.p_value <= alpha && !outcome.rejected;
      }
    }

    report.all_confirmed = report.all_confirmed && outcome.confirmed;
    report.subsets.push_back(std::move(outcome));
  }

  report.rejected.assign(static_cast<std::size_t>(k), true);
  report.adjusted_p.assign(static_cast<std::size_t>(k), BigRat(0));
  for (const auto& outcome : report.subsets) {
    for (int e : outcome.members) {
      if (!outcome.rejected) report.rejected[static_cast<std::size_t>(e)] = false;
      report.adjusted_p[static_cast<std::size_t>(e)] =
          std::max(report.adjusted_p[static_cast<std::size_t>(e)], outcome.p_value);
    }
    if (outcome.members.size() == static_cast<std::size_t>(k)) report.global_p = outcome.p_value;
  }
  return report;
}

}  // namespace optexact
