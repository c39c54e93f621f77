#include <doctest.h>

#include "optexact/closed.hpp"

#include <map>
#include <string>
#include <vector>

using namespace optexact;

namespace {

CrossTable study_table() {
  CrossTable table;
  table.k = 2;
  table.trt = {0, 1, 13, 80};
  table.ctr = {2, 10, 12, 57};
  return table;
}

AlternativeSpec planning_alternative() {
  AlternativeSpec alt;
  alt.rates_trt = {0.9, 0.9};
  alt.rates_ctr = {0.75, 0.75};
  return alt;
}

const BigRat kFisherP0(BigInt("2112321512052"), BigInt("4416424952405713"));
const BigRat kFisherP1(BigInt("7704624829234525"), BigInt("22922514935182382"));

MethodSpec method_of(MethodKind kind) {
  MethodSpec method;
  method.kind = kind;
  if (kind == MethodKind::OptimalPower || kind == MethodKind::BonfOptimalPower)
    method.alt = planning_alternative();
  return method;
}

BigRat max_covering_p(const ClosedTestReport& report, int endpoint) {
  BigRat p = 0;
  for (const auto& subset : report.subsets)
    for (const int e : subset.members)
      if (e == endpoint && subset.p_value > p) p = subset.p_value;
  return p;
}

}  // namespace

TEST_CASE("method names round-trip through the registry") {
  for (const MethodKind kind :
       {MethodKind::OptimalAlpha, MethodKind::OptimalArea, MethodKind::OptimalPower,
        MethodKind::GreedyRegion, MethodKind::BonfUnweighted, MethodKind::BonfHkt,
        MethodKind::BonfWestfallTroendle, MethodKind::BonfOptimalAlpha,
        MethodKind::BonfOptimalPower, MethodKind::BonfGreedy, MethodKind::MinP}) {
    CHECK(method_from_name(method_name(kind)) == kind);
  }
  CHECK_THROWS_AS(method_from_name("no-such-method"), std::invalid_argument);
  CHECK(is_joint_method(MethodKind::OptimalArea));
  CHECK(is_joint_method(MethodKind::GreedyRegion));
  CHECK_FALSE(is_joint_method(MethodKind::BonfHkt));
  CHECK_FALSE(is_joint_method(MethodKind::MinP));
}

TEST_CASE("method specs are validated structurally") {
  const int k = 2;

  // power objectives need an assumed alternative
  MethodSpec no_alt;
  no_alt.kind = MethodKind::OptimalPower;
  CHECK_THROWS_AS(validate_method_spec(no_alt, k), std::invalid_argument);
  no_alt.kind = MethodKind::BonfOptimalPower;
  CHECK_THROWS_AS(validate_method_spec(no_alt, k), std::invalid_argument);
  CHECK_NOTHROW(validate_method_spec(method_of(MethodKind::OptimalPower), k));

  // the alternative must cover every endpoint
  MethodSpec wrong_arity = method_of(MethodKind::OptimalPower);
  wrong_arity.alt.rates_trt = {0.9};
  wrong_arity.alt.rates_ctr = {0.75};
  CHECK_THROWS_AS(validate_method_spec(wrong_arity, k), std::invalid_argument);

  // lexicographic refinements only apply to the joint optimizers
  MethodSpec lex_on_boundary = method_of(MethodKind::BonfHkt);
  lex_on_boundary.lex_tail = {ObjectiveKind::Area};
  CHECK_THROWS_AS(validate_method_spec(lex_on_boundary, k), std::invalid_argument);
  MethodSpec lex_on_greedy = method_of(MethodKind::GreedyRegion);
  lex_on_greedy.lex_tail = {ObjectiveKind::Area};
  CHECK_THROWS_AS(validate_method_spec(lex_on_greedy, k), std::invalid_argument);
  MethodSpec lex_ok = method_of(MethodKind::OptimalAlpha);
  lex_ok.lex_tail = {ObjectiveKind::Power, ObjectiveKind::Area};
  CHECK_NOTHROW(validate_method_spec(lex_ok, k));

  // joint consonance: joint methods with exactly two endpoints
  MethodSpec joint_cons = method_of(MethodKind::OptimalAlpha);
  joint_cons.consonance = ConsonanceMode::JointK2;
  CHECK_NOTHROW(validate_method_spec(joint_cons, 2));
  CHECK_THROWS_AS(validate_method_spec(joint_cons, 3), std::invalid_argument);
  MethodSpec cons_on_boundary = method_of(MethodKind::BonfGreedy);
  cons_on_boundary.consonance = ConsonanceMode::JointK2;
  CHECK_THROWS_AS(validate_method_spec(cons_on_boundary, 2), std::invalid_argument);

  // boundary consonance: Bonferroni-type constructions only
  for (const MethodKind kind : {MethodKind::BonfUnweighted, MethodKind::BonfOptimalAlpha,
                                MethodKind::BonfOptimalPower, MethodKind::BonfGreedy}) {
    MethodSpec spec = method_of(kind);
    spec.consonance = ConsonanceMode::BonferroniMonotone;
    CHECK_NOTHROW(validate_method_spec(spec, 3));
  }
  for (const MethodKind kind : {MethodKind::BonfHkt, MethodKind::BonfWestfallTroendle,
                                MethodKind::MinP, MethodKind::OptimalAlpha}) {
    MethodSpec spec = method_of(kind);
    spec.consonance = ConsonanceMode::BonferroniMonotone;
    CHECK_THROWS_AS(validate_method_spec(spec, 3), std::invalid_argument);
  }
}

TEST_CASE("closed test of the study data with the level-maximal construction") {
  const ClosedTestReport report =
      closed_test(study_table(), method_of(MethodKind::OptimalAlpha), BigRat(1, 40));

  CHECK(report.observed == StatisticVector{93, 81});
  REQUIRE(report.subsets.size() == 3);
  CHECK(report.subsets[0].members == std::vector<int>{0, 1});
  CHECK(report.subsets[1].members == std::vector<int>{0});
  CHECK(report.subsets[2].members == std::vector<int>{1});
  CHECK(report.all_confirmed);

  CHECK(report.global_p == BigRat(BigInt("24621936435030885838669773"),
                                  BigInt("140786327945741868964192862425")));
  CHECK(report.subsets[1].p_value == kFisherP0);
  CHECK(report.subsets[2].p_value == kFisherP1);

  CHECK(report.rejected == std::vector<bool>{true, false});
  CHECK(report.adjusted_p[0] == kFisherP0);
  CHECK(report.adjusted_p[1] == kFisherP1);
  for (int e = 0; e < 2; ++e) CHECK(report.adjusted_p[static_cast<std::size_t>(e)] == max_covering_p(report, e));
}

TEST_CASE("global p-values of the remaining study constructions match frozen ratios") {
  const CrossTable table = study_table();
  const BigRat alpha(1, 40);

  SUBCASE("area-maximal and greedy constructions coincide here") {
    const ClosedTestReport area =
        closed_test(table, method_of(MethodKind::OptimalArea), alpha);
    const ClosedTestReport greedy =
        closed_test(table, method_of(MethodKind::GreedyRegion), alpha);
    const BigRat frozen(BigInt("140644658561029801402352"),
                        BigInt("804493302547096394081102071"));
    CHECK(area.global_p == frozen);
    CHECK(greedy.global_p == frozen);
    CHECK(area.rejected == std::vector<bool>{true, false});
    CHECK(area.adjusted_p[0] == kFisherP0);
  }

  SUBCASE("power-maximal construction under the planning alternative") {
    const ClosedTestReport report =
        closed_test(table, method_of(MethodKind::OptimalPower), alpha);
    const BigRat frozen(BigInt("1600676338758300224143104"),
                        BigInt("2488316493924740009599687801"));
    CHECK(report.global_p == frozen);
    CHECK(report.rejected == std::vector<bool>{true, false});
    // the global p exceeds the marginal p here, so it drives the adjustment
    CHECK(report.adjusted_p[0] == frozen);
    CHECK(report.adjusted_p[1] == kFisherP1);
  }

  SUBCASE("consonant power-maximal construction") {
    MethodSpec method = method_of(MethodKind::OptimalPower);
    method.consonance = ConsonanceMode::JointK2;
    const ClosedTestReport report = closed_test(table, method, alpha);
    const BigRat frozen(BigInt("31322444151292453680552"),
                        BigInt("17901557510249928126616459"));
    CHECK(report.global_p == frozen);
    CHECK(report.adjusted_p[0] == frozen);
    CHECK(report.rejected == std::vector<bool>{true, false});
  }
}

TEST_CASE("singleton subsets reduce to the marginal exact test for every method") {
  const CrossTable table = study_table();
  const BigRat alpha(1, 40);

  for (const MethodKind kind :
       {MethodKind::OptimalAlpha, MethodKind::OptimalArea, MethodKind::OptimalPower,
        MethodKind::GreedyRegion, MethodKind::BonfUnweighted, MethodKind::BonfHkt,
        MethodKind::BonfWestfallTroendle, MethodKind::BonfOptimalAlpha,
        MethodKind::BonfOptimalPower, MethodKind::BonfGreedy, MethodKind::MinP}) {
    const ClosedTestReport report = closed_test(table, method_of(kind), alpha);
    REQUIRE(report.subsets.size() == 3);
    CHECK(report.subsets[1].p_value == kFisherP0);
    CHECK(report.subsets[2].p_value == kFisherP1);
    CHECK(report.subsets[1].rejected == (kFisherP0 <= alpha));
    CHECK(report.subsets[2].rejected == (kFisherP1 <= alpha));
    // closure: an endpoint is rejected iff every covering subset rejects
    for (int e = 0; e < 2; ++e) {
      bool all = true;
      for (const auto& subset : report.subsets)
        for (const int member : subset.members)
          if (member == e && !subset.rejected) all = false;
      CHECK(report.rejected[static_cast<std::size_t>(e)] == all);
    }
    CHECK(report.adjusted_p[0] == max_covering_p(report, 0));
    CHECK(report.adjusted_p[1] == max_covering_p(report, 1));
  }
}

TEST_CASE("subset boundaries honour monotone consonance caps") {
  const CrossTable table = study_table();
  const MarginVector m = margins(table);
  const std::vector<MarginalTest> tests = {marginal_test(m, 0), marginal_test(m, 1)};
  const BigRat alpha(1, 40);

  MethodSpec method = method_of(MethodKind::BonfOptimalPower);
  method.consonance = ConsonanceMode::BonferroniMonotone;

  // boundaries are indexed by position within the subset
  std::map<unsigned, CriticalBoundaries> memo;
  const CriticalBoundaries full = subset_boundaries(tests, method, {0, 1}, alpha, memo);
  const CriticalBoundaries only0 = subset_boundaries(tests, method, {0}, alpha, memo);
  const CriticalBoundaries only1 = subset_boundaries(tests, method, {1}, alpha, memo);

  // a singleton's critical value never exceeds the full-set one
  CHECK(only0.c[0] <= full.c[0]);
  CHECK(only1.c[0] <= full.c[1]);
  // and equals the marginal exact test's critical value at full level
  CHECK(only0.c[0] == smallest_boundary(tests[0], alpha));
  CHECK(only1.c[0] == smallest_boundary(tests[1], alpha));
}

TEST_CASE("an exhausted node budget is reported, not hidden") {
  ClosedTestOptions options;
  options.max_iterations = 1;
  const ClosedTestReport report =
      closed_test(study_table(), method_of(MethodKind::OptimalAlpha), BigRat(1, 40), options);
  CHECK_FALSE(report.all_confirmed);
  bool some_unconfirmed = false;
  for (const auto& subset : report.subsets)
    if (!subset.confirmed) some_unconfirmed = true;
  CHECK(some_unconfirmed);
}

TEST_CASE("labels default to the method name and keep explicit overrides") {
  MethodSpec plain = method_of(MethodKind::OptimalArea);
  CHECK(method_label(plain) == std::string(method_name(MethodKind::OptimalArea)));
  plain.label = "area, planning variant";
  CHECK(method_label(plain) == "area, planning variant");
}
