#include "optexact/power.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>
#include <tuple>

namespace optexact {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

// --- deterministic counter-based randomness -------------------------------

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// splitmix64 stream whose start is keyed by (seed, draw); every draw owns an
// independent stream, so results do not depend on how draws are scheduled
// across threads.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t draw)
      : state_(mix64(seed + 0x9e3779b97f4a7c15ull * (draw + 1))) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

int sample_category(CounterRng& rng, const std::vector<double>& q) {
  const double u = rng.u01();
  double cum = 0.0;
  for (std::size_t s = 0; s + 1 < q.size(); ++s) {
    cum += q[s];
    if (u < cum) return static_cast<int>(s);
  }
  return static_cast<int>(q.size()) - 1;
}

// --- shared helpers --------------------------------------------------------

void for_each_composition(long long total, int parts,
                          const std::function<void(const std::vector<long long>&)>& fn) {
  std::vector<long long> v(static_cast<std::size_t>(parts), 0);
  auto rec = [&](auto&& self, int s, long long remaining) -> void {
    if (s == parts - 1) {
      v[static_cast<std::size_t>(s)] = remaining;
      fn(v);
      return;
    }
    for (long long x = 0; x <= remaining; ++x) {
      v[static_cast<std::size_t>(s)] = x;
      self(self, s + 1, remaining - x);
    }
  };
  rec(rec, 0, total);
}

void check_positive_cells(const CellProbabilities& cells, const std::string& arm) {
  for (double q : cells.q)
    require(q > 0.0, "exact evaluation needs strictly positive joint cell probabilities; the " +
                         arm + " arm has an empty category (correlation at a feasibility bound)");
}

// log P(pooled margins = m) under the two independent multinomial arms; the
// unnormalised conditional total exp(log_alt_total) supplies the sum over all
// treatment splits compatible with m.
double log_margin_probability(const MarginVector& m, const CellProbabilities& cells_c,
                              double log_alt_total) {
  double lp = std::lgamma(static_cast<double>(m.n_trt) + 1.0) +
              std::lgamma(static_cast<double>(m.n_ctr) + 1.0);
  for (std::size_t s = 0; s < m.m.size(); ++s) {
    lp -= std::lgamma(static_cast<double>(m.m[s]) + 1.0);
    if (m.m[s] > 0) lp += static_cast<double>(m.m[s]) * std::log(cells_c.q[s]);
  }
  return lp + log_alt_total;
}

std::vector<std::vector<int>> endpoint_subsets(int k, std::size_t min_size) {
  std::vector<std::vector<int>> out;
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<int> J;
    for (int e = 0; e < k; ++e)
      if (mask & (1u << e)) J.push_back(e);
    if (J.size() >= min_size) out.push_back(std::move(J));
  }
  return out;
}

int thread_count(const PowerStudyConfig& config, std::size_t work_items) {
  int threads = std::max(1, config.threads);
  threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads),
                                                   std::max<std::size_t>(1, work_items)));
  return threads;
}

struct EventTally {
  double global = 0.0;
  double any = 0.0;
  double all = 0.0;
  std::vector<double> elem;
  std::uint64_t iterations = 0;
  bool confirmed = true;
};

// Region decision for the full endpoint set of one margin vector, plus the
// per-point event contributions. Elementary closure decisions reuse the fact
// that every singleton test reduces to the endpoint's own exact test.
EventTally evaluate_on_margin(const JointDistribution& dist, const DominanceStructure& dom,
                              const std::vector<MarginalTest>& tests,
                              const std::vector<long long>& fisher_c, const MethodSpec& method,
                              const BigRat& alpha, const PowerStudyConfig& config) {
  const int k = dist.k();
  EventTally tally;
  tally.elem.assign(static_cast<std::size_t>(k), 0.0);

  Mask members(static_cast<std::size_t>(dist.size()));
  if (is_joint_method(method.kind)) {
    Mask alive(static_cast<std::size_t>(dist.size()));
    alive.set();
    Mask forbidden;
    const Mask* forbidden_ptr = nullptr;
    if (method.consonance == ConsonanceMode::JointK2 && k == 2) {
      forbidden = consonance_forbidden_block(dist, tests, alpha);
      forbidden_ptr = &forbidden;
      alive &= ~forbidden;
    }
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
      search.max_iterations = config.max_iterations;
      search.forbidden = forbidden_ptr;
      // The power objective maximises mass under the method's *assumed*
      // alternative, which need not equal the scenario generating the data.
      // Null weights and support are margin-determined, so the assumed-
      // alternative distribution shares canonical order and dominance with
      // `dist` and the member indices transfer directly.
      const JointDistribution* search_dist = &dist;
      JointDistribution assumed;
      if (method.kind == MethodKind::OptimalPower) {
        assumed = joint_alt_distribution(dist.margin, method.alt.cells_trt(),
                                         method.alt.cells_ctr(), dist.endpoints,
                                         config.support_limit);
        search_dist = &assumed;
      }
      const OptResult result = branch_and_bound(*search_dist, dom, objective, alpha, search);
      members = result.region.members;
      tally.iterations = result.iterations;
      tally.confirmed = result.confirmed_optimal;
    }
  } else if (method.kind == MethodKind::MinP) {
    members = minp_region(dist, tests, alpha).members;
  } else {
    std::vector<int> all(static_cast<std::size_t>(k));
    std::iota(all.begin(), all.end(), 0);
    std::map<unsigned, CriticalBoundaries> memo;
    const CriticalBoundaries bounds = subset_boundaries(tests, method, all, alpha, memo);
    for (int i = 0; i < dist.size(); ++i)
      if (bounds.rejects(dist.points[static_cast<std::size_t>(i)].t))
        members.set(static_cast<std::size_t>(i));
  }

  for (int i = 0; i < dist.size(); ++i) {
    if (!members.test(static_cast<std::size_t>(i))) continue;
    const SupportPoint& p = dist.points[static_cast<std::size_t>(i)];
    tally.global += p.alt_mass;
    bool all_rejected = true;
    bool any_rejected = false;
    for (int e = 0; e < k; ++e) {
      const bool rejected = k == 1 || p.t[static_cast<std::size_t>(e)] >=
                                          fisher_c[static_cast<std::size_t>(e)];
      if (rejected) {
        tally.elem[static_cast<std::size_t>(e)] += p.alt_mass;
        any_rejected = true;
      } else {
        all_rejected = false;
      }
    }
    if (any_rejected) tally.any += p.alt_mass;
    if (all_rejected) tally.all += p.alt_mass;
  }
  return tally;
}

std::uint64_t weighted_quantile(std::vector<std::pair<std::uint64_t, double>> items, double q,
                                double total) {
  if (items.empty()) return 0;
  std::sort(items.begin(), items.end());
  double cum = 0.0;
  for (const auto& [value, prob] : items) {
    cum += prob;
    if (cum >= q * total) return value;
  }
  return items.back().first;
}

std::uint64_t rank_quantile(const std::vector<std::uint64_t>& sorted, double q) {
  if (sorted.empty()) return 0;
  const auto n = sorted.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  rank = std::min(std::max<std::size_t>(rank, 1), n);
  return sorted[rank - 1];
}

// --- simulation caches -----------------------------------------------------

struct SubsetKey {
  int method = 0;
  unsigned mask = 0;
  std::vector<long long> payload;

  bool operator<(const SubsetKey& other) const {
    return std::tie(method, mask, payload) < std::tie(other.method, other.mask, other.payload);
  }
};

struct SubsetDecision {
  bool boundary_based = false;
  CriticalBoundaries bounds;
  std::vector<StatisticVector> members;  // sorted; joint and min-tail regions
  bool confirmed = true;
  std::uint64_t iterations = 0;

  bool rejects(const StatisticVector& t) const {
    if (boundary_based) return bounds.rejects(t);
    return std::binary_search(members.begin(), members.end(), t);
  }
};

SubsetDecision compute_subset_decision(const MethodSpec& method, const std::vector<int>& J,
                                       const MarginVector& m,
                                       const std::vector<MarginalTest>& tests,
                                       const BigRat& alpha, const PowerStudyConfig& config) {
  SubsetDecision out;
  if (is_joint_method(method.kind)) {
    // The power objective ranks points by mass under the method's assumed
    // alternative; all other joint objectives only need the null weights.
    const JointDistribution dist =
        method.kind == MethodKind::OptimalPower
            ? joint_alt_distribution(m, method.alt.cells_trt(), method.alt.cells_ctr(), J,
                                     config.support_limit)
            : joint_null_distribution(m, J, config.support_limit);
    const DominanceStructure dom = dominance(dist);
    Mask alive(static_cast<std::size_t>(dist.size()));
    alive.set();
    Mask forbidden;
    const Mask* forbidden_ptr = nullptr;
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
      search.max_iterations = config.max_iterations;
      search.forbidden = forbidden_ptr;
      const OptResult result = branch_and_bound(dist, dom, objective, alpha, search);
      members = result.region.members;
      out.iterations = result.iterations;
      out.confirmed = result.confirmed_optimal;
    }
    for (int i = 0; i < dist.size(); ++i)
      if (members.test(static_cast<std::size_t>(i)))
        out.members.push_back(dist.points[static_cast<std::size_t>(i)].t);
    std::sort(out.members.begin(), out.members.end());
  } else if (method.kind == MethodKind::MinP) {
    const JointDistribution dist = joint_null_distribution(m, J, config.support_limit);
    std::vector<MarginalTest> tests_J;
    for (int e : J) tests_J.push_back(tests[static_cast<std::size_t>(e)]);
    const MinPResult mp = minp_region(dist, tests_J, alpha);
    for (int i = 0; i < dist.size(); ++i)
      if (mp.members.test(static_cast<std::size_t>(i)))
        out.members.push_back(dist.points[static_cast<std::size_t>(i)].t);
    std::sort(out.members.begin(), out.members.end());
  } else {
    std::map<unsigned, CriticalBoundaries> memo;
    out.bounds = subset_boundaries(tests, method, J, alpha, memo);
    out.boundary_based = true;
  }
  return out;
}

}  // namespace

void Scenario::validate() const {
  require(!rates_trt.empty(), "a scenario needs at least one endpoint");
  require(rates_trt.size() == rates_ctr.size(),
          "treatment and control rate vectors must have equal length");
  require(k() <= kDefaultMaxEndpoints, "at most " + std::to_string(kDefaultMaxEndpoints) +
                                           " endpoints are supported");
  require(n_trt > 0 && n_ctr > 0, "both group sizes must be positive");
  for (double p : rates_trt)
    require(p > 0.0 && p < 1.0, "success rates must lie strictly between 0 and 1");
  for (double p : rates_ctr)
    require(p > 0.0 && p < 1.0, "success rates must lie strictly between 0 and 1");
}

Scenario read_scenario_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open scenario file '" + path + "'");
  Scenario sc;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    sc.label = j.value("label", std::string());
    sc.n_trt = j.at("n_trt").get<int>();
    sc.n_ctr = j.at("n_ctr").get<int>();
    sc.rates_trt = j.at("rates_trt").get<std::vector<double>>();
    sc.rates_ctr = j.at("rates_ctr").get<std::vector<double>>();
    sc.rho = j.value("rho", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("scenario file '" + path + "': " + e.what());
  }
  sc.validate();
  return sc;
}

std::vector<MarginCell> margin_distribution(const Scenario& scenario) {
  scenario.validate();
  const int k = scenario.k();
  const CellProbabilities cells_t = scenario.cells_trt();
  const CellProbabilities cells_c = scenario.cells_ctr();
  check_positive_cells(cells_t, "treatment");
  check_positive_cells(cells_c, "control");

  std::vector<int> all(static_cast<std::size_t>(k));
  std::iota(all.begin(), all.end(), 0);

  std::vector<MarginCell> cells;
  for_each_composition(scenario.n_trt + scenario.n_ctr, 1 << k,
                       [&](const std::vector<long long>& mvec) {
                         MarginVector m;
                         m.k = k;
                         m.m = mvec;
                         m.n_trt = scenario.n_trt;
                         m.n_ctr = scenario.n_ctr;
                         const JointDistribution dist =
                             joint_alt_distribution(m, cells_t, cells_c, all);
                         MarginCell cell;
                         cell.margin = m;
                         cell.probability =
                             std::exp(log_margin_probability(m, cells_c, dist.log_alt_total));
                         cells.push_back(std::move(cell));
                       });
  return cells;
}

std::vector<PowerReport> exact_power(const PowerStudyConfig& config) {
  const Scenario& sc = config.scenario;
  sc.validate();
  const int k = sc.k();
  require(k <= 2,
          "exact evaluation enumerates all pooled margins and supports one or two endpoints; "
          "use simulation for larger designs");
  require(config.alpha >= 0 && config.alpha <= 1, "significance level must lie in [0, 1]");
  require(!config.methods.empty(), "at least one method is required");
  for (const auto& method : config.methods) validate_method_spec(method, k);

  const CellProbabilities cells_t = sc.cells_trt();
  const CellProbabilities cells_c = sc.cells_ctr();
  check_positive_cells(cells_t, "treatment");
  check_positive_cells(cells_c, "control");

  std::vector<std::vector<long long>> margin_list;
  for_each_composition(sc.n_trt + sc.n_ctr, 1 << k,
                       [&](const std::vector<long long>& v) { margin_list.push_back(v); });

  const std::size_t n_methods = config.methods.size();
  struct Row {
    double prob = 0.0;
    std::vector<EventTally> tallies;
  };
  std::vector<Row> rows(margin_list.size());

  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<int> all(static_cast<std::size_t>(k));
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t i = begin; i < end; ++i) {
      MarginVector m;
      m.k = k;
      m.m = margin_list[i];
      m.n_trt = sc.n_trt;
      m.n_ctr = sc.n_ctr;
      const JointDistribution dist =
          joint_alt_distribution(m, cells_t, cells_c, all, config.support_limit);
      const DominanceStructure dom = dominance(dist);
      std::vector<MarginalTest> tests;
      std::vector<long long> fisher_c;
      for (int e = 0; e < k; ++e) {
        tests.push_back(marginal_test(m, e));
        fisher_c.push_back(smallest_boundary(tests.back(), config.alpha));
      }
      Row& row = rows[i];
      row.prob = std::exp(log_margin_probability(m, cells_c, dist.log_alt_total));
      row.tallies.reserve(n_methods);
      for (const auto& method : config.methods)
        row.tallies.push_back(
            evaluate_on_margin(dist, dom, tests, fisher_c, method, config.alpha, config));
    }
  };

  const int threads = thread_count(config, margin_list.size());
  if (threads == 1) {
    work(0, margin_list.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (margin_list.size() + static_cast<std::size_t>(threads) - 1) /
                              static_cast<std::size_t>(threads);
    for (int t = 0; t < threads; ++t) {
      const std::size_t begin = static_cast<std::size_t>(t) * chunk;
      const std::size_t end = std::min(margin_list.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(work, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  std::vector<PowerReport> reports(n_methods);
  std::vector<std::vector<std::pair<std::uint64_t, double>>> iteration_mass(n_methods);
  // Accumulate the *unconfirmed* mass so the common all-confirmed case yields
  // a share of exactly 1 instead of a rounded sum of margin probabilities.
  std::vector<double> unconfirmed_mass(n_methods, 0.0);
  double total_prob = 0.0;
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    reports[mi].label = method_label(config.methods[mi]);
    reports[mi].p_elem.assign(static_cast<std::size_t>(k), 0.0);
  }
  for (const Row& row : rows) {
    total_prob += row.prob;
    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      const EventTally& tally = row.tallies[mi];
      PowerReport& report = reports[mi];
      report.p_global += row.prob * tally.global;
      report.p_any += row.prob * tally.any;
      report.p_all += row.prob * tally.all;
      for (int e = 0; e < k; ++e)
        report.p_elem[static_cast<std::size_t>(e)] +=
            row.prob * tally.elem[static_cast<std::size_t>(e)];
      if (!tally.confirmed) unconfirmed_mass[mi] += row.prob;
      iteration_mass[mi].emplace_back(tally.iterations, row.prob);
      reports[mi].iter_max = std::max(reports[mi].iter_max, tally.iterations);
    }
  }
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    reports[mi].confirmed_share = 1.0 - unconfirmed_mass[mi];
    reports[mi].iter_q50 = weighted_quantile(iteration_mass[mi], 0.5, total_prob);
    reports[mi].iter_q90 = weighted_quantile(iteration_mass[mi], 0.9, total_prob);
  }
  return reports;
}

std::vector<PowerReport> simulate_power(const PowerStudyConfig& config) {
  const Scenario& sc = config.scenario;
  sc.validate();
  const int k = sc.k();
  require(config.alpha >= 0 && config.alpha <= 1, "significance level must lie in [0, 1]");
  require(!config.methods.empty(), "at least one method is required");
  require(config.n_sims > 0, "the simulation needs at least one draw");
  for (const auto& method : config.methods) validate_method_spec(method, k);

  const CellProbabilities cells_t = sc.cells_trt();
  const CellProbabilities cells_c = sc.cells_ctr();
  const std::size_t n_methods = config.methods.size();
  const std::size_t n_sims = config.n_sims;
  const auto subsets = endpoint_subsets(k, 2);

  std::map<SubsetKey, SubsetDecision> cache;
  std::mutex cache_mutex;

  auto cached_decision = [&](std::size_t mi, const std::vector<int>& J, const MarginVector& m,
                             const std::vector<MarginalTest>& tests) -> const SubsetDecision* {
    const MethodSpec& method = config.methods[mi];
    SubsetKey key;
    key.method = static_cast<int>(mi);
    for (int e : J) key.mask |= 1u << e;
    if (is_joint_method(method.kind) || method.kind == MethodKind::MinP) {
      key.payload = restrict_margins(m, J).m;
    } else if (method.consonance == ConsonanceMode::BonferroniMonotone) {
      for (int e = 0; e < k; ++e)
        key.payload.push_back(restrict_margins(m, {e}).m[1]);
    } else {
      for (int e : J) key.payload.push_back(restrict_margins(m, {e}).m[1]);
    }
    {
      std::lock_guard<std::mutex> lock(cache_mutex);
      if (auto it = cache.find(key); it != cache.end()) return &it->second;
    }
    SubsetDecision fresh = compute_subset_decision(method, J, m, tests, config.alpha, config);
    std::lock_guard<std::mutex> lock(cache_mutex);
    const auto [it, inserted] = cache.emplace(std::move(key), std::move(fresh));
    (void)inserted;  // a racing thread computed the same value; keep the first
    return &it->second;
  };

  struct Tally {
    std::uint64_t global = 0, any = 0, all = 0, confirmed = 0;
    std::vector<std::uint64_t> elem;
  };
  struct ThreadState {
    std::vector<Tally> tallies;
  };

  std::vector<std::vector<std::uint64_t>> draw_iterations(
      n_methods, std::vector<std::uint64_t>(n_sims, 0));

  auto run_draw = [&](std::uint64_t d, ThreadState& state) {
    CounterRng rng(config.seed, d);
    std::vector<long long> pooled(static_cast<std::size_t>(1) << k, 0);
    std::vector<long long> y_trt(static_cast<std::size_t>(1) << k, 0);
    for (int j = 0; j < sc.n_trt; ++j) {
      const int s = sample_category(rng, cells_t.q);
      ++y_trt[static_cast<std::size_t>(s)];
      ++pooled[static_cast<std::size_t>(s)];
    }
    for (int j = 0; j < sc.n_ctr; ++j)
      ++pooled[static_cast<std::size_t>(sample_category(rng, cells_c.q))];

    MarginVector m;
    m.k = k;
    m.m = pooled;
    m.n_trt = sc.n_trt;
    m.n_ctr = sc.n_ctr;

    StatisticVector t_obs(static_cast<std::size_t>(k), 0);
    for (std::size_t s = 0; s < y_trt.size(); ++s)
      for (int e = 0; e < k; ++e)
        if (s & (static_cast<std::size_t>(1) << (k - 1 - e)))
          t_obs[static_cast<std::size_t>(e)] += static_cast<int>(y_trt[s]);

    std::vector<MarginalTest> tests;
    std::vector<long long> fisher_c;
    for (int e = 0; e < k; ++e) {
      tests.push_back(marginal_test(m, e));
      fisher_c.push_back(smallest_boundary(tests.back(), config.alpha));
    }

    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      bool confirmed = true;
      std::uint64_t iterations = 0;
      std::vector<char> rejected(static_cast<std::size_t>(k), 1);
      bool global = false;

      for (int e = 0; e < k; ++e) {
        const bool hit = t_obs[static_cast<std::size_t>(e)] >= fisher_c[static_cast<std::size_t>(e)];
        if (!hit) rejected[static_cast<std::size_t>(e)] = 0;
        if (k == 1) global = hit;
      }
      for (const auto& J : subsets) {
        const SubsetDecision* decision = cached_decision(mi, J, m, tests);
        StatisticVector t_J;
        for (int e : J) t_J.push_back(t_obs[static_cast<std::size_t>(e)]);
        const bool hit = decision->rejects(t_J);
        iterations += decision->iterations;
        confirmed = confirmed && decision->confirmed;
        if (static_cast<int>(J.size()) == k) global = hit;
        if (!hit)
          for (int e : J) rejected[static_cast<std::size_t>(e)] = 0;
      }

      Tally& tally = state.tallies[mi];
      bool any = false, all = true;
      for (int e = 0; e < k; ++e) {
        if (rejected[static_cast<std::size_t>(e)]) {
          ++tally.elem[static_cast<std::size_t>(e)];
          any = true;
        } else {
          all = false;
        }
      }
      if (global) ++tally.global;
      if (any) ++tally.any;
      if (all) ++tally.all;
      if (confirmed) ++tally.confirmed;
      draw_iterations[mi][d] = iterations;
    }
  };

  const int threads = thread_count(config, n_sims);
  std::vector<ThreadState> states(static_cast<std::size_t>(threads));
  for (auto& state : states) {
    state.tallies.resize(n_methods);
    for (auto& tally : state.tallies) tally.elem.assign(static_cast<std::size_t>(k), 0);
  }

  auto worker = [&](int t) {
    const std::uint64_t chunk =
        (n_sims + static_cast<std::uint64_t>(threads) - 1) / static_cast<std::uint64_t>(threads);
    const std::uint64_t begin = static_cast<std::uint64_t>(t) * chunk;
    const std::uint64_t end = std::min<std::uint64_t>(n_sims, begin + chunk);
    for (std::uint64_t d = begin; d < end; ++d) run_draw(d, states[static_cast<std::size_t>(t)]);
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }

  std::vector<PowerReport> reports(n_methods);
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    PowerReport& report = reports[mi];
    report.label = method_label(config.methods[mi]);
    report.n_sims = n_sims;
    Tally total;
    total.elem.assign(static_cast<std::size_t>(k), 0);
    for (const auto& state : states) {
      const Tally& tally = state.tallies[mi];
      total.global += tally.global;
      total.any += tally.any;
      total.all += tally.all;
      total.confirmed += tally.confirmed;
      for (int e = 0; e < k; ++e)
        total.elem[static_cast<std::size_t>(e)] += tally.elem[static_cast<std::size_t>(e)];
    }
    const auto n = static_cast<double>(n_sims);
    report.p_global = static_cast<double>(total.global) / n;
    report.p_any = static_cast<double>(total.any) / n;
    report.p_all = static_cast<double>(total.all) / n;
    report.p_elem.resize(static_cast<std::size_t>(k));
    for (int e = 0; e < k; ++e)
      report.p_elem[static_cast<std::size_t>(e)] =
          static_cast<double>(total.elem[static_cast<std::size_t>(e)]) / n;
    report.confirmed_share = static_cast<double>(total.confirmed) / n;

    std::vector<std::uint64_t> sorted = draw_iterations[mi];
    std::sort(sorted.begin(), sorted.end());
    report.iter_q50 = rank_quantile(sorted, 0.5);
    report.iter_q90 = rank_quantile(sorted, 0.9);
    report.iter_max = sorted.empty() ? 0 : sorted.back();

    double se = 0.0;
    auto track = [&](double p) { se = std::max(se, std::sqrt(p * (1.0 - p) / n)); };
    track(report.p_global);
    track(report.p_any);
    track(report.p_all);
    for (double p : report.p_elem) track(p);
    report.mc_se = se;
  }
  return reports;
}

}  // namespace optexact
