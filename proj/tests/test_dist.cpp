#include <doctest.h>

#include "optexact/dist.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

using namespace optexact;

namespace {

MarginVector study_margins() {
  MarginVector m;
  m.k = 2;
  m.m = {2, 11, 25, 137};  // patterns 00, 01, 10, 11
  m.n_trt = 94;
  m.n_ctr = 81;
  return m;
}

// Brute-force conditional weights: recurse over per-category treatment counts
// and accumulate prod_s C(m_s, y_s) per statistic vector.
std::map<StatisticVector, BigInt> brute_force_weights(const MarginVector& m) {
  BinomialTable binom(static_cast<int>(m.total()));
  std::map<StatisticVector, BigInt> acc;
  const int cats = m.categories();
  std::vector<long long> y(static_cast<std::size_t>(cats), 0);
  auto rec = [&](auto&& self, int s, long long remaining, const BigInt& w) -> void {
    if (s == cats - 1) {
      if (remaining > m.m[static_cast<std::size_t>(s)]) return;
      y[static_cast<std::size_t>(s)] = remaining;
      const BigInt weight =
          w * binom(static_cast<int>(m.m[static_cast<std::size_t>(s)]),
                    static_cast<int>(remaining));
      if (weight == 0) return;
      StatisticVector t(static_cast<std::size_t>(m.k), 0);
      for (int c = 0; c < cats; ++c)
        for (int e = 0; e < m.k; ++e)
          if ((c >> (m.k - 1 - e)) & 1) t[static_cast<std::size_t>(e)] += static_cast<int>(y[static_cast<std::size_t>(c)]);
      acc[t] += weight;
      return;
    }
    for (long long v = 0; v <= std::min(remaining, m.m[static_cast<std::size_t>(s)]); ++v) {
      y[static_cast<std::size_t>(s)] = v;
      self(self, s + 1, remaining - v,
           w * binom(static_cast<int>(m.m[static_cast<std::size_t>(s)]), static_cast<int>(v)));
    }
  };
  rec(rec, 0, m.n_trt, BigInt(1));
  return acc;
}

}  // namespace

TEST_CASE("study support has 386 points and hypergeometric total") {
  const JointDistribution dist = joint_null_distribution(study_margins(), {0, 1});
  CHECK(dist.size() == 386);

  BinomialTable binom(175);
  CHECK(dist.total_weight == binom(175, 94));

  BigInt sum = 0;
  for (const auto& p : dist.points) sum += p.weight;
  CHECK(sum == dist.total_weight);
}

TEST_CASE("canonical order is decreasing weight with decreasing lexicographic ties") {
  const JointDistribution dist = joint_null_distribution(study_margins(), {0, 1});
  for (int i = 0; i + 1 < dist.size(); ++i) {
    const auto& a = dist.points[static_cast<std::size_t>(i)];
    const auto& b = dist.points[static_cast<std::size_t>(i + 1)];
    const bool ordered = a.weight > b.weight || (a.weight == b.weight && a.t > b.t);
    CHECK(ordered);
  }
}

TEST_CASE("index lookup round-trips every support point") {
  const JointDistribution dist = joint_null_distribution(study_margins(), {0, 1});
  for (int i = 0; i < dist.size(); ++i)
    CHECK(dist.index_of(dist.points[static_cast<std::size_t>(i)].t) == i);
  CHECK(dist.index_of(StatisticVector{999, 999}) == -1);
}

TEST_CASE("weights agree with direct enumeration on small margins") {
  MarginVector m;
  m.k = 2;
  m.m = {1, 2, 2, 3};
  m.n_trt = 4;
  m.n_ctr = 4;
  const JointDistribution dist = joint_null_distribution(m, {0, 1});
  const auto expected = brute_force_weights(m);
  CHECK(static_cast<std::size_t>(dist.size()) == expected.size());
  for (const auto& p : dist.points) {
    const auto it = expected.find(p.t);
    REQUIRE(it != expected.end());
    CHECK(p.weight == it->second);
  }
}

TEST_CASE("restricting to one endpoint matches the collapsed table") {
  const MarginVector m = study_margins();
  const JointDistribution joint = joint_null_distribution(m, {0});
  const JointDistribution collapsed = joint_null_distribution(restrict_margins(m, {0}), {0});
  REQUIRE(joint.size() == collapsed.size());
  for (int i = 0; i < joint.size(); ++i) {
    CHECK(joint.points[static_cast<std::size_t>(i)].t ==
          collapsed.points[static_cast<std::size_t>(i)].t);
    CHECK(joint.points[static_cast<std::size_t>(i)].weight ==
          collapsed.points[static_cast<std::size_t>(i)].weight);
  }
}

TEST_CASE("support limit guards enumeration") {
  CHECK_THROWS_AS(joint_null_distribution(study_margins(), {0, 1}, 100), SupportLimitError);
}

TEST_CASE("alternative masses are a probability vector favouring large statistics") {
  MarginVector m = study_margins();
  OddsVector odds;
  odds.r = {1.0, 1.0, 3.0, 3.0};  // success on endpoint 1 is three times as likely
  const JointDistribution dist = joint_alt_distribution(m, odds);
  REQUIRE(dist.has_alt);

  double total = 0.0;
  for (const auto& p : dist.points) total += p.alt_mass;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));

  // odds of one reproduce the null law
  OddsVector ones;
  ones.r = {1.0, 1.0, 1.0, 1.0};
  const JointDistribution null_like = joint_alt_distribution(m, ones);
  for (const auto& p : null_like.points) {
    const double expected = to_double(BigRat(p.weight, null_like.total_weight));
    CHECK(p.alt_mass == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("alternative from cell probabilities matches explicit odds") {
  const MarginVector m = study_margins();
  CellProbabilities qt;
  qt.k = 2;
  qt.q = {0.0625, 0.1875, 0.1875, 0.5625};  // independent 0.75 / 0.75
  CellProbabilities qc;
  qc.k = 2;
  qc.q = {0.25, 0.25, 0.25, 0.25};  // independent 0.5 / 0.5

  const JointDistribution via_cells = joint_alt_distribution(m, qt, qc, {0, 1});
  OddsVector odds;
  odds.r = {0.25, 0.75, 0.75, 2.25};
  const JointDistribution via_odds = joint_alt_distribution(m, odds);
  REQUIRE(via_cells.size() == via_odds.size());
  for (int i = 0; i < via_cells.size(); ++i)
    CHECK(via_cells.points[static_cast<std::size_t>(i)].alt_mass ==
          doctest::Approx(via_odds.points[static_cast<std::size_t>(i)].alt_mass).epsilon(1e-9));
}

TEST_CASE("unnormalised alternative total matches a direct sum") {
  MarginVector m;
  m.k = 1;
  m.m = {3, 5};
  m.n_trt = 4;
  m.n_ctr = 4;
  OddsVector odds;
  odds.r = {1.0, 2.5};
  const JointDistribution dist = joint_alt_distribution(m, odds);
  REQUIRE(dist.has_alt);
  // sum over y1 of C(3, 4-y1) C(5, y1) 2.5^y1
  BinomialTable binom(8);
  double direct = 0.0;
  for (int y1 = 0; y1 <= 4; ++y1) {
    const int y0 = 4 - y1;
    if (y0 > 3) continue;
    direct += to_double(BigRat(binom(3, y0) * binom(5, y1))) * std::pow(2.5, y1);
  }
  CHECK(std::exp(dist.log_alt_total) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("marginal tails and exact p-values of the study data") {
  const MarginVector m = study_margins();
  // endpoint 1 has margin 162 of 175, endpoint 2 has 148
  CHECK(marginal_tail(m, 0, 0) == 1);
  CHECK(marginal_tail(m, 0, 95) == 0);

  const BigRat p1 = fisher_p(m, 0, 93);
  const BigRat p2 = fisher_p(m, 1, 81);
  CHECK(p1 == BigRat(BigInt("2112321512052"), BigInt("4416424952405713")));
  CHECK(p2 == BigRat(BigInt("7704624829234525"), BigInt("22922514935182382")));
  // the published rounding: 0.0005 and 0.3361
  CHECK(std::llround(to_double(p1) * 1e4) == 5);
  CHECK(std::llround(to_double(p2) * 1e4) == 3361);

  // tails are decreasing in the threshold
  BigRat prev(2);
  for (long long c = 0; c <= 95; ++c) {
    const BigRat tail = marginal_tail(m, 0, c);
    CHECK(tail <= prev);
    prev = tail;
  }
}

TEST_CASE("distribution dump is well-formed json") {
  MarginVector m;
  m.k = 1;
  m.m = {2, 2};
  m.n_trt = 2;
  m.n_ctr = 2;
  const JointDistribution dist = joint_null_distribution(m, {0});
  std::stringstream out;
  dump_distribution_json(dist, out);
  const std::string text = out.str();
  CHECK(text.find("\"total_weight\": \"6\"") != std::string::npos);
  CHECK(text.find("\"points\"") != std::string::npos);
}
