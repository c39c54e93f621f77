#include <doctest.h>

#include "optexact/bonf.hpp"
#include "optexact/closed.hpp"

#include <cmath>
#include <string>
#include <vector>

using namespace optexact;

namespace {

MarginVector study_margins() {
  MarginVector m;
  m.k = 2;
  m.m = {2, 11, 25, 137};
  m.n_trt = 94;
  m.n_ctr = 81;
  return m;
}

std::vector<MarginalTest> study_tests() {
  const MarginVector m = study_margins();
  return {marginal_test(m, 0), marginal_test(m, 1)};
}

// Exact level of the union region rejected by per-endpoint boundaries.
BigRat joint_level(const JointDistribution& dist, const std::vector<long long>& c) {
  return evaluate_alpha(dist, boundary_region_mask(dist, c));
}

}  // namespace

TEST_CASE("marginal tests carry the exact hypergeometric law of each count") {
  const auto tests = study_tests();
  REQUIRE(tests.size() == 2);

  // endpoint 0 pools to 162 successes among 175 subjects, 94 on treatment
  CHECK(tests[0].lo == 81);
  CHECK(tests[0].hi == 94);
  // endpoint 1 pools to 148 successes
  CHECK(tests[1].lo == 67);
  CHECK(tests[1].hi == 94);

  for (const auto& test : tests) {
    BigRat mass = 0;
    for (const auto& p : test.pmf) mass += p;
    CHECK(mass == 1);

    CHECK(test.S(test.lo) == 1);
    CHECK(test.S(test.lo - 5) == 1);
    CHECK(test.S(test.hi + 1) == 0);
    CHECK(test.alpha_min() == test.pmf_at(test.hi));
    for (long long t = test.lo; t < test.hi; ++t) CHECK(test.S(t) > test.S(t + 1));

    // the tail under odds ratio one is the null tail
    for (long long t = test.lo; t <= test.hi; ++t)
      CHECK(test.alt_tail(t, 1.0) == doctest::Approx(to_double(test.S(t))).epsilon(1e-10));
    // a favourable odds ratio shifts mass upward
    CHECK(test.alt_tail(test.hi, 3.0) > to_double(test.S(test.hi)));
  }

  // agreement with the distribution-level tail helper
  const MarginVector m = study_margins();
  CHECK(tests[0].S(91) == marginal_tail(m, 0, 91));
  CHECK(tests[1].S(85) == marginal_tail(m, 1, 85));
}

TEST_CASE("per-endpoint exact tests at full level reject from 91 and 85") {
  const auto tests = study_tests();
  const BigRat alpha(1, 40);
  CHECK(smallest_boundary(tests[0], alpha) == 91);
  CHECK(smallest_boundary(tests[1], alpha) == 85);
  CHECK(tests[0].S(91) <= alpha);
  CHECK(tests[0].S(90) > alpha);
  CHECK(tests[1].S(85) <= alpha);
  CHECK(tests[1].S(84) > alpha);

  // an unattainable budget pushes the boundary above the support
  CHECK(smallest_boundary(tests[0], BigRat(0)) == tests[0].hi + 1);
}

TEST_CASE("equal-split boundaries spend less than half the level per endpoint") {
  const auto tests = study_tests();
  const BigRat alpha(1, 40);
  const CriticalBoundaries b = bonferroni_unweighted(tests, alpha);
  CHECK(b.c == std::vector<long long>{92, 86});
  CHECK(tests[0].S(92) <= alpha / 2);
  CHECK(tests[1].S(86) <= alpha / 2);
  CHECK(b.sum() == tests[0].S(92) + tests[1].S(86));
  CHECK(b.sum() <= alpha);

  const JointDistribution dist = joint_null_distribution(study_margins(), {0, 1});
  CHECK(std::llround(to_double(joint_level(dist, b.c)) * 1e4) == 98);
}

TEST_CASE("discreteness-adaptive split matches the equal split on the study data") {
  const auto tests = study_tests();
  const CriticalBoundaries b = bonferroni_hkt(tests, BigRat(1, 40));
  CHECK(b.c == std::vector<long long>{92, 86});
  CHECK(b.sum() <= BigRat(1, 40));
}

TEST_CASE("common-boundary rule settles on 91 for both endpoints") {
  const auto tests = study_tests();
  const BigRat alpha(1, 40);
  const CriticalBoundaries b = westfall_troendle(tests, alpha);
  CHECK(b.c == std::vector<long long>{91, 91});
  CHECK(b.sum() <= alpha);
  CHECK(tests[0].S(90) + tests[1].S(90) > alpha);

  const JointDistribution dist = joint_null_distribution(study_margins(), {0, 1});
  const Mask members = boundary_region_mask(dist, b.c);
  const RejectionRegion region = make_region(dist, members);
  CHECK(region.weight == BigInt("37878187770706043933059069873689010414442168524000"));
  CHECK(evaluate_alpha(dist, members) ==
        BigRat(BigInt("2272018521830643918814877768"),
               BigInt("106997609238763820412786575443")));
}

TEST_CASE("boundary optimization by spent level and by power") {
  const auto tests = study_tests();
  const BigRat alpha(1, 40);

  BonfObjective by_alpha;
  by_alpha.kind = BonfObjectiveKind::AlphaSum;
  const CriticalBoundaries a = optimize_boundaries(tests, by_alpha, alpha);
  CHECK(a.c == std::vector<long long>{91, 87});
  CHECK(a.sum() <= alpha);

  AlternativeSpec alt;
  alt.rates_trt = {0.9, 0.9};
  alt.rates_ctr = {0.75, 0.75};
  BonfObjective by_power;
  by_power.kind = BonfObjectiveKind::PowerSum;
  by_power.odds = alt.odds_ratios();
  REQUIRE(by_power.odds.size() == 2);
  CHECK(by_power.odds[0] == doctest::Approx(3.0));
  CHECK(by_power.odds[1] == doctest::Approx(3.0));
  const CriticalBoundaries p = optimize_boundaries(tests, by_power, alpha);
  CHECK(p.c == std::vector<long long>{92, 85});
  CHECK(p.sum() <= alpha);

  // exhaustive optimality of the spent level within the budget
  for (long long c0 = tests[0].lo; c0 <= tests[0].hi + 1; ++c0)
    for (long long c1 = tests[1].lo; c1 <= tests[1].hi + 1; ++c1) {
      const BigRat spend = tests[0].S(c0) + tests[1].S(c1);
      if (spend <= alpha) CHECK(spend <= a.sum());
    }
}

TEST_CASE("stepwise boundary lowering reaches the power-optimal pair here") {
  const auto tests = study_tests();
  const BigRat alpha(1, 40);
  const CriticalBoundaries b = greedy_boundaries(tests, alpha);
  CHECK(b.c == std::vector<long long>{92, 85});
  CHECK(b.sum() <= alpha);

  // no single further step fits the leftover budget
  for (std::size_t i = 0; i < b.c.size(); ++i) {
    if (b.c[i] <= tests[i].lo) continue;
    const BigRat next = b.sum() - tests[i].S(b.c[i]) + tests[i].S(b.c[i] - 1);
    CHECK(next > alpha);
  }
}

TEST_CASE("boundary caps bound each critical value from above") {
  const auto tests = study_tests();
  const BigRat alpha(1, 40);
  const std::vector<long long> caps = {92, 85};

  BonfObjective by_alpha;
  const CriticalBoundaries a = optimize_boundaries(tests, by_alpha, alpha, &caps);
  REQUIRE(a.c.size() == 2);
  CHECK(a.c[0] <= caps[0]);
  CHECK(a.c[1] <= caps[1]);
  CHECK(a.sum() <= alpha);

  // capping can only lose exhaustion relative to the unconstrained optimum
  const CriticalBoundaries unconstrained = optimize_boundaries(tests, by_alpha, alpha);
  CHECK(a.sum() <= unconstrained.sum());

  // exhaustive optimality within the capped combinations
  for (long long c0 = tests[0].lo; c0 <= caps[0]; ++c0)
    for (long long c1 = tests[1].lo; c1 <= caps[1]; ++c1) {
      const BigRat spend = tests[0].S(c0) + tests[1].S(c1);
      if (spend <= alpha) CHECK(spend <= a.sum());
    }

  // the stepwise rule starts from the caps and only moves downward
  const CriticalBoundaries g = greedy_boundaries(tests, alpha, &caps);
  CHECK(g.c == std::vector<long long>{92, 85});
}

TEST_CASE("rejection by boundaries matches the induced joint region") {
  const MarginVector m = study_margins();
  const JointDistribution dist = joint_null_distribution(m, {0, 1});
  const auto tests = study_tests();
  const CriticalBoundaries b = bonferroni_unweighted(tests, BigRat(1, 40));

  const Mask members = boundary_region_mask(dist, b.c);
  for (int i = 0; i < dist.size(); ++i) {
    const auto& t = dist.points[static_cast<std::size_t>(i)].t;
    const bool crosses = t[0] >= b.c[0] || t[1] >= b.c[1];
    CHECK(members.test(static_cast<std::size_t>(i)) == crosses);
    CHECK(b.rejects(t) == crosses);
  }

  // the union region is a valid rejection region in its own right
  const DominanceStructure dom = dominance(dist);
  CHECK(check_region(dist, dom, members, BigRat(1, 40)).ok);
}

TEST_CASE("an endpoint with its boundary above the support is untested") {
  const auto tests = study_tests();
  // nearly the whole budget is needed by endpoint 0 at its most extreme value
  const BigRat tiny = tests[0].alpha_min();
  const CriticalBoundaries b = westfall_troendle(tests, tiny / 2);
  for (std::size_t i = 0; i < b.c.size(); ++i) {
    CHECK_FALSE(b.tested(i));
    CHECK(b.contribution[i] == 0);
  }
  CHECK(b.sum() == 0);
  CHECK_FALSE(b.rejects(StatisticVector{94, 92}));
}

TEST_CASE("smallest-tail rule on the study data") {
  const MarginVector m = study_margins();
  const JointDistribution dist = joint_null_distribution(m, {0, 1});
  const auto tests = study_tests();
  const BigRat alpha(1, 40);

  const MinPResult res = minp_region(dist, tests, alpha);
  CHECK(res.q_star ==
        BigRat(BigInt("4838241392887294748"), BigInt("273018614135489760811")));
  CHECK(res.thresholds == std::vector<long long>{92, 85});
  CHECK(res.members == boundary_region_mask(dist, res.thresholds));
  const RejectionRegion region = make_region(dist, res.members);
  CHECK(region.weight == BigInt("38787819367852613310896583164971567103988721122800"));
  CHECK(evaluate_alpha(dist, res.members) ==
        BigRat(BigInt("2034079613511749905254092"), BigInt("93545732854313534195476985")));

  // every member attains a smallest marginal tail within q*, non-members exceed it
  for (int i = 0; i < dist.size(); ++i) {
    const auto& t = dist.points[static_cast<std::size_t>(i)].t;
    const BigRat q = std::min(tests[0].S(t[0]), tests[1].S(t[1]));
    CHECK(res.members.test(static_cast<std::size_t>(i)) == (q <= res.q_star));
  }
}

TEST_CASE("observed level of the smallest-tail rule grows the region to the observation") {
  const MarginVector m = study_margins();
  const JointDistribution dist = joint_null_distribution(m, {0, 1});
  const auto tests = study_tests();

  for (const StatisticVector t_obs :
       {StatisticVector{93, 81}, StatisticVector{94, 92}, StatisticVector{92, 85},
        StatisticVector{91, 84}, StatisticVector{85, 75}}) {
    REQUIRE(dist.index_of(t_obs) >= 0);
    const BigRat q_obs = std::min(tests[0].S(t_obs[0]), tests[1].S(t_obs[1]));
    BigInt weight = 0;
    for (const auto& point : dist.points) {
      const BigRat q = std::min(tests[0].S(point.t[0]), tests[1].S(point.t[1]));
      if (q <= q_obs) weight += point.weight;
    }
    CHECK(minp_observed_level(dist, tests, t_obs) == BigRat(weight, dist.total_weight));
  }

  // rejection at level alpha happens exactly when the observed level fits
  const BigRat alpha(1, 40);
  CHECK(minp_observed_level(dist, tests, StatisticVector{92, 85}) <= alpha);
  CHECK(minp_observed_level(dist, tests, StatisticVector{91, 84}) > alpha);
}

TEST_CASE("boundary program export is a one-hot selection per endpoint") {
  const auto tests = study_tests();
  BonfObjective by_alpha;
  const std::string lp = export_bonf_ilp(tests, by_alpha, BigRat(1, 40));
  CHECK(lp.find("Maximize") != std::string::npos);
  CHECK(lp.find("Subject To") != std::string::npos);
  CHECK(lp.find("onehot_1:") != std::string::npos);
  CHECK(lp.find("onehot_2:") != std::string::npos);
  CHECK(lp.find("level:") != std::string::npos);
  CHECK(lp.find("Binary") != std::string::npos);
  CHECK(lp.find("End") != std::string::npos);

  // one variable per candidate boundary, including the untested one above hi
  for (std::size_t i = 0; i < tests.size(); ++i)
    for (long long c = tests[i].lo; c <= tests[i].hi + 1; ++c)
      CHECK(lp.find("z_" + std::to_string(i + 1) + "_" + std::to_string(c)) !=
            std::string::npos);
}
