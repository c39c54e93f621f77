#include "optexact/bonf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace optexact {

namespace {

double logsumexp(const std::vector<double>& xs, std::size_t from, std::size_t to) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = from; i < to; ++i) mx = std::max(mx, xs[i]);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += std::exp(xs[i] - mx);
  return mx + std::log(s);
}

void check_tests(const std::vector<MarginalTest>& tests) {
  if (tests.empty()) throw std::invalid_argument("at least one endpoint test is required");
  for (const auto& t : tests)
    if (t.hi < t.lo) throw std::invalid_argument("marginal test has an empty support");
}

}  // namespace

long long smallest_boundary(const MarginalTest& test, const BigRat& budget) {
  if (test.alpha_min() > budget) return test.hi + 1;
  long long c = test.hi;
  while (c > test.lo && test.S(c - 1) <= budget) --c;
  return c;
}

BigRat MarginalTest::S(long long c) const {
  if (c <= lo) return BigRat(1);
  if (c > hi) return BigRat(0);
  return tail[static_cast<std::size_t>(c - lo)];
}

const BigRat& MarginalTest::pmf_at(long long t) const {
  if (t < lo || t > hi) throw std::out_of_range("count outside the marginal support");
  return pmf[static_cast<std::size_t>(t - lo)];
}

double MarginalTest::alt_tail(long long c, double odds_ratio) const {
  if (c <= lo) return 1.0;
  if (c > hi) return 0.0;
  if (!(odds_ratio > 0.0) || !std::isfinite(odds_ratio))
    throw std::invalid_argument("odds ratio must be positive and finite");
  const double log_or = std::log(odds_ratio);
  std::vector<double> tilted(log_weight.size());
  for (std::size_t i = 0; i < log_weight.size(); ++i)
    tilted[i] = log_weight[i] + static_cast<double>(lo + static_cast<long long>(i)) * log_or;
  const double all = logsumexp(tilted, 0, tilted.size());
  const double upper = logsumexp(tilted, static_cast<std::size_t>(c - lo), tilted.size());
  return std::exp(upper - all);
}

MarginalTest marginal_test(const MarginVector& m, int endpoint) {
  if (endpoint < 0 || endpoint >= m.k) throw std::invalid_argument("endpoint index out of range");
  const MarginVector one = restrict_margins(m, {endpoint});
  const long long successes = one.m[1];
  const long long failures = one.m[0];

  MarginalTest test;
  test.lo = std::max(0LL, one.n_trt - failures);
  test.hi = std::min(one.n_trt, successes);

  BinomialTable binom(static_cast<int>(one.total()));
  const BigInt total = binom(static_cast<int>(one.total()), static_cast<int>(one.n_trt));
  std::vector<BigInt> weights;
  for (long long t = test.lo; t <= test.hi; ++t)
    weights.push_back(binom(static_cast<int>(successes), static_cast<int>(t)) *
                      binom(static_cast<int>(failures), static_cast<int>(one.n_trt - t)));

  test.pmf.reserve(weights.size());
  test.log_weight.reserve(weights.size());
  for (const auto& w : weights) {
    test.pmf.emplace_back(w, total);
    test.log_weight.push_back(std::log(w.convert_to<double>()));
  }
  test.tail.resize(weights.size());
  BigInt suffix = 0;
  for (std::size_t i = weights.size(); i-- > 0;) {
    suffix += weights[i];
    test.tail[i] = BigRat(suffix, total);
  }
  return test;
}

BigRat CriticalBoundaries::sum() const {
  BigRat s = 0;
  for (const auto& v : contribution) s += v;
  return s;
}

bool CriticalBoundaries::rejects(const StatisticVector& t) const {
  for (std::size_t i = 0; i < c.size(); ++i)
    if (t[i] >= c[i]) return true;
  return false;
}

CriticalBoundaries bonferroni_unweighted(const std::vector<MarginalTest>& tests,
                                         const BigRat& alpha) {
  check_tests(tests);
  const BigRat budget = alpha / static_cast<int>(tests.size());
  CriticalBoundaries out;
  for (const auto& test : tests) {
    const long long c = smallest_boundary(test, budget);
    out.c.push_back(c);
    out.hi.push_back(test.hi);
    out.contribution.push_back(test.S(c));
  }
  return out;
}

CriticalBoundaries bonferroni_hkt(const std::vector<MarginalTest>& tests, const BigRat& alpha) {
  check_tests(tests);
  const int k = static_cast<int>(tests.size());

  std::vector<BigRat> alpha_min;
  for (const auto& test : tests) alpha_min.push_back(test.alpha_min());

  // Smallest divisor m such that at most m endpoints can attain a marginal
  // level of x / m; the spent level m * p then never exceeds alpha in total.
  auto divisor = [&](const BigRat& x) {
    for (int m = 1; m <= k; ++m) {
      int attainable = 0;
      for (const auto& a : alpha_min)
        if (a * m <= x) ++attainable;
      if (attainable <= m) return m;
    }
    return k;
  };
  auto rejects = [&](const BigRat& p) {
    for (int m = 1; m <= k; ++m)
      if (p * m <= alpha && divisor(p * m) <= m) return true;
    return false;
  };

  CriticalBoundaries out;
  for (const auto& test : tests) {
    long long c = test.hi + 1;
    while (c > test.lo && rejects(test.S(c - 1))) --c;
    out.c.push_back(c);
    out.hi.push_back(test.hi);
    out.contribution.push_back(test.S(c));
  }
  return out;
}

CriticalBoundaries westfall_troendle(const std::vector<MarginalTest>& tests, const BigRat& alpha) {
  check_tests(tests);
  long long lo = tests.front().lo, hi = tests.front().hi;
  for (const auto& test : tests) {
    lo = std::min(lo, test.lo);
    hi = std::max(hi, test.hi);
  }
  auto spent = [&](long long c) {
    BigRat s = 0;
    for (const auto& test : tests) s += test.S(c);
    return s;
  };
  long long c_star = hi + 1;
  while (c_star > lo && spent(c_star - 1) <= alpha) --c_star;

  CriticalBoundaries out;
  for (const auto& test : tests) {
    out.c.push_back(c_star);
    out.hi.push_back(test.hi);
    out.contribution.push_back(test.S(c_star));
  }
  return out;
}

CriticalBoundaries optimize_boundaries(const std::vector<MarginalTest>& tests,
                                       const BonfObjective& objective, const BigRat& alpha,
                                       const std::vector<long long>* caps) {
  check_tests(tests);
  const std::size_t k = tests.size();
  if (objective.kind == BonfObjectiveKind::PowerSum && objective.odds.size() != k)
    throw std::invalid_argument("power objective needs one odds ratio per endpoint");
  if (caps && caps->size() != k)
    throw std::invalid_argument("boundary caps must cover every endpoint");

  // Admissible boundaries per endpoint: values spending at most alpha alone,
  // plus the untested option; caps cut the list from above.
  struct Candidate {
    long long c;
    BigRat spend;
    double gain;
  };
  std::vector<std::vector<Candidate>> cands(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& test = tests[i];
    const long long cap = caps ? (*caps)[i] : test.hi + 1;
    if (cap >= test.hi + 1) cands[i].push_back({test.hi + 1, BigRat(0), 0.0});
    for (long long c = test.hi; c >= test.lo; --c) {
      if (test.S(c) > alpha) break;
      if (c > cap) continue;
      double gain = 0.0;
      if (objective.kind == BonfObjectiveKind::PowerSum)
        gain = test.alt_tail(c, objective.odds[i]);
      cands[i].push_back({c, test.S(c), gain});
    }
    if (cands[i].empty())
      throw std::invalid_argument("no admissible boundary for endpoint " + std::to_string(i + 1) +
                                  " under the given caps");
  }

  std::vector<std::size_t> pick(k, 0), best;
  BigRat best_spend = -1;
  double best_gain = -1.0;
  long long best_csum = 0;
  std::vector<long long> best_vec;

  auto better = [&](const BigRat& spend, double gain, long long csum,
                    const std::vector<long long>& vec) {
    if (best.empty()) return true;
    if (objective.kind == BonfObjectiveKind::AlphaSum) {
      if (spend != best_spend) return spend > best_spend;
    } else {
      const double tol = 1e-12 * std::max(1.0, std::max(std::abs(gain), std::abs(best_gain)));
      if (gain > best_gain + tol) return true;
      if (gain < best_gain - tol) return false;
    }
    if (csum != best_csum) return csum < best_csum;
    return vec < best_vec;
  };

  std::vector<long long> vec(k);
  auto rec = [&](auto&& self, std::size_t i, BigRat spend, double gain, long long csum) -> void {
    if (spend > alpha) return;
    if (i == k) {
      if (better(spend, gain, csum, vec)) {
        best = pick;
        best_spend = spend;
        best_gain = gain;
        best_csum = csum;
        best_vec = vec;
      }
      return;
    }
    for (std::size_t j = 0; j < cands[i].size(); ++j) {
      pick[i] = j;
      vec[i] = cands[i][j].c;
      self(self, i + 1, spend + cands[i][j].spend, gain + cands[i][j].gain,
           csum + cands[i][j].c);
    }
  };
  rec(rec, 0, BigRat(0), 0.0, 0);

  if (best.empty())
    throw std::invalid_argument("no boundary combination satisfies the level constraint");

  CriticalBoundaries out;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& chosen = cands[i][best[i]];
    out.c.push_back(chosen.c);
    out.hi.push_back(tests[i].hi);
    out.contribution.push_back(chosen.spend);
  }
  return out;
}

CriticalBoundaries greedy_boundaries(const std::vector<MarginalTest>& tests, const BigRat& alpha,
                                     const std::vector<long long>* caps) {
  check_tests(tests);
  const std::size_t k = tests.size();
  if (caps && caps->size() != k)
    throw std::invalid_argument("boundary caps must cover every endpoint");

  CriticalBoundaries out;
  BigRat spend = 0;
  for (std::size_t i = 0; i < k; ++i) {
    // Capped endpoints start at their cap so the result stays below it.
    long long start = tests[i].hi + 1;
    if (caps && (*caps)[i] < start) start = std::max((*caps)[i], tests[i].lo);
    out.c.push_back(start);
    out.hi.push_back(tests[i].hi);
    out.contribution.push_back(tests[i].S(start));
    spend += out.contribution.back();
  }
  if (spend > alpha)
    throw std::invalid_argument("boundary caps alone exceed the level constraint");

  for (;;) {
    std::size_t pick = k;
    BigRat pick_step;
    for (std::size_t i = 0; i < k; ++i) {
      if (out.c[i] <= tests[i].lo) continue;
      const BigRat step = tests[i].pmf_at(out.c[i] - 1);
      if (spend + step > alpha) continue;
      if (pick == k || step < pick_step) {  // ties keep the lowest endpoint
        pick = i;
        pick_step = step;
      }
    }
    if (pick == k) break;
    --out.c[pick];
    out.contribution[pick] += pick_step;
    spend += pick_step;
  }
  return out;
}

std::string export_bonf_ilp(const std::vector<MarginalTest>& tests, const BonfObjective& objective,
                            const BigRat& alpha) {
  check_tests(tests);
  const std::size_t k = tests.size();
  if (objective.kind == BonfObjectiveKind::PowerSum && objective.odds.size() != k)
    throw std::invalid_argument("power objective needs one odds ratio per endpoint");

  // All marginal tails share the denominator C(total, n_trt), so the level
  // row scales to exact integers by multiplying through with it.
  BigInt denom = 1;
  for (const auto& test : tests)
    for (const auto& s : test.tail)
      denom = boost::multiprecision::lcm(denom, boost::multiprecision::denominator(s));

  const BigInt budget = floor_div(boost::multiprecision::numerator(alpha) * denom,
                                  boost::multiprecision::denominator(alpha));

  std::ostringstream out;
  out.precision(17);
  out << "\\ per-endpoint critical boundaries as a 0/1 integer program\n";
  out << "\\ z_i_c = 1 picks boundary c for endpoint i; c above the support means untested\n";
  out << "\\ level weights are exact tails scaled by " << denom.str() << "\n";

  auto var = [](std::size_t i, long long c) {
    std::ostringstream v;
    v << "z_" << (i + 1) << '_' << c;
    return v.str();
  };

  out << "Maximize\n obj:\n";
  bool first = true;
  for (std::size_t i = 0; i < k; ++i) {
    for (long long c = tests[i].lo; c <= tests[i].hi + 1; ++c) {
      std::ostringstream coeff;
      coeff.precision(17);
      if (objective.kind == BonfObjectiveKind::AlphaSum) {
        const BigRat spend = tests[i].S(c);
        coeff << (boost::multiprecision::numerator(spend) *
                  (denom / boost::multiprecision::denominator(spend)))
                     .str();
      } else {
        coeff << (c > tests[i].hi ? 0.0 : tests[i].alt_tail(c, objective.odds[i]));
      }
      out << (first ? " " : " + ") << coeff.str() << ' ' << var(i, c) << '\n';
      first = false;
    }
  }

  out << "Subject To\n";
  for (std::size_t i = 0; i < k; ++i) {
    out << " onehot_" << (i + 1) << ":\n";
    bool f2 = true;
    for (long long c = tests[i].lo; c <= tests[i].hi + 1; ++c) {
      out << (f2 ? " " : " + ") << var(i, c) << '\n';
      f2 = false;
    }
    out << " = 1\n";
  }
  out << " level:\n";
  first = true;
  for (std::size_t i = 0; i < k; ++i) {
    for (long long c = tests[i].lo; c <= tests[i].hi + 1; ++c) {
      const BigRat spend = tests[i].S(c);
      const BigInt scaled = boost::multiprecision::numerator(spend) *
                            (denom / boost::multiprecision::denominator(spend));
      out << (first ? " " : " + ") << scaled.str() << ' ' << var(i, c) << '\n';
      first = false;
    }
  }
  out << " <= " << budget.str() << '\n';

  out << "Binary\n";
  for (std::size_t i = 0; i < k; ++i)
    for (long long c = tests[i].lo; c <= tests[i].hi + 1; ++c) out << ' ' << var(i, c) << '\n';
  out << "End\n";
  return out.str();
}

Mask boundary_region_mask(const JointDistribution& dist, const std::vector<long long>& c) {
  if (c.size() != static_cast<std::size_t>(dist.k()))
    throw std::invalid_argument("boundary vector must cover every endpoint");
  Mask members(static_cast<std::size_t>(dist.size()));
  for (int i = 0; i < dist.size(); ++i) {
    const auto& t = dist.points[static_cast<std::size_t>(i)].t;
    for (std::size_t e = 0; e < c.size(); ++e) {
      if (t[e] >= c[e]) {
        members.set(static_cast<std::size_t>(i));
        break;
      }
    }
  }
  return members;
}

namespace {

std::vector<BigRat> min_tails(const JointDistribution& dist,
                              const std::vector<MarginalTest>& tests) {
  if (tests.size() != static_cast<std::size_t>(dist.k()))
    throw std::invalid_argument("one marginal test per endpoint is required");
  std::vector<BigRat> mins;
  mins.reserve(static_cast<std::size_t>(dist.size()));
  for (const auto& point : dist.points) {
    BigRat mn = tests[0].S(point.t[0]);
    for (std::size_t e = 1; e < tests.size(); ++e) mn = std::min(mn, tests[e].S(point.t[e]));
    mins.push_back(mn);
  }
  return mins;
}

}  // namespace

MinPResult minp_region(const JointDistribution& dist, const std::vector<MarginalTest>& tests,
                       const BigRat& alpha) {
  const auto mins = min_tails(dist, tests);
  std::vector<BigRat> levels = mins;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  const BigInt budget = floor_div(boost::multiprecision::numerator(alpha) * dist.total_weight,
                                  boost::multiprecision::denominator(alpha));

  MinPResult result;
  result.q_star = 0;
  result.members = Mask(static_cast<std::size_t>(dist.size()));
  for (const auto& q : levels) {
    BigInt weight = 0;
    Mask members(static_cast<std::size_t>(dist.size()));
    for (int i = 0; i < dist.size(); ++i)
      if (mins[static_cast<std::size_t>(i)] <= q) {
        members.set(static_cast<std::size_t>(i));
        weight += dist.points[static_cast<std::size_t>(i)].weight;
      }
    if (weight > budget) break;  // levels grow with q, so stop at the first miss
    result.q_star = q;
    result.members = members;
  }

  for (const auto& test : tests) {
    long long c = smallest_boundary(test, result.q_star);
    result.thresholds.push_back(c);
  }
  return result;
}

BigRat minp_observed_level(const JointDistribution& dist, const std::vector<MarginalTest>& tests,
                           const StatisticVector& t_obs) {
  const auto mins = min_tails(dist, tests);
  const int obs = dist.index_of(t_obs);
  if (obs < 0) throw std::invalid_argument("observed statistic is not in the support");
  const BigRat q = mins[static_cast<std::size_t>(obs)];
  BigInt weight = 0;
  for (int i = 0; i < dist.size(); ++i)
    if (mins[static_cast<std::size_t>(i)] <= q) weight += dist.points[static_cast<std::size_t>(i)].weight;
  return dist.level(weight);
}

}  // namespace optexact
