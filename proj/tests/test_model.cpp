#include <doctest.h>

#include "optexact/model.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

using namespace optexact;

namespace {

std::string fixture(const std::string& name) {
  return std::string(OPTEXACT_FIXTURE_DIR) + "/" + name;
}

// The two-endpoint study used throughout: categories (11, 10, 01, 00) carry
// counts (80, 13, 1, 0) under treatment and (57, 12, 10, 2) under control.
CrossTable study_table() {
  CrossTable t;
  t.k = 2;
  t.trt = {0, 1, 13, 80};   // index 0 = pattern 00, ..., index 3 = pattern 11
  t.ctr = {2, 10, 12, 57};
  return t;
}

}  // namespace

TEST_CASE("category patterns use the first endpoint as the top bit") {
  CHECK(pattern_of_category(3, 2) == std::vector<int>{1, 1});
  CHECK(pattern_of_category(2, 2) == std::vector<int>{1, 0});
  CHECK(pattern_of_category(1, 2) == std::vector<int>{0, 1});
  CHECK(pattern_of_category(0, 2) == std::vector<int>{0, 0});
  CHECK(pattern_string(5, 3) == "101");
  for (int idx = 0; idx < 8; ++idx)
    CHECK(category_of_pattern(pattern_of_category(idx, 3)) == idx);
}

TEST_CASE("cross table totals and validation") {
  CrossTable t = study_table();
  CHECK_NOTHROW(t.validate());
  CHECK(t.n_trt() == 94);
  CHECK(t.n_ctr() == 81);

  CrossTable bad = t;
  bad.trt[0] = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = t;
  bad.ctr.pop_back();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = t;
  bad.k = 3;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("pooled margins of the study data") {
  const MarginVector m = margins(study_table());
  CHECK(m.k == 2);
  CHECK(m.m == std::vector<long long>{2, 11, 25, 137});
  CHECK(m.n_trt == 94);
  CHECK(m.n_ctr == 81);
  CHECK(m.total() == 175);
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("statistics project category counts onto endpoints") {
  const CrossTable t = study_table();
  // treatment successes: endpoint 1 counts categories 1x, endpoint 2 counts x1
  const StatisticVector both = project(t.trt, 2, {0, 1});
  CHECK(both == StatisticVector{93, 81});
  CHECK(project(t.trt, 2, {0}) == StatisticVector{93});
  CHECK(project(t.trt, 2, {1}) == StatisticVector{81});
  CHECK(project(t.ctr, 2, {0, 1}) == StatisticVector{69, 67});
}

TEST_CASE("margin restriction collapses categories") {
  const MarginVector m = margins(study_table());
  const MarginVector first = restrict_margins(m, {0});
  CHECK(first.k == 1);
  CHECK(first.m == std::vector<long long>{13, 162});
  CHECK(first.n_trt == 94);
  const MarginVector second = restrict_margins(m, {1});
  CHECK(second.m == std::vector<long long>{27, 148});
  const MarginVector both = restrict_margins(m, {0, 1});
  CHECK(both == m);
}

TEST_CASE("cell restriction keeps marginal probabilities") {
  CellProbabilities cells;
  cells.k = 2;
  cells.q = {0.1, 0.2, 0.3, 0.4};  // patterns 00, 01, 10, 11
  CHECK_NOTHROW(cells.validate());
  const CellProbabilities first = restrict_cells(cells, {0});
  CHECK(first.k == 1);
  CHECK(first.q[1] == doctest::Approx(0.7));  // P(endpoint 1 success)
  CHECK(first.q[0] == doctest::Approx(0.3));
  const CellProbabilities second = restrict_cells(cells, {1});
  CHECK(second.q[1] == doctest::Approx(0.6));
}

TEST_CASE("subject records aggregate by group label") {
  std::vector<SubjectRecord> records;
  records.push_back({"T", {1, 1}});
  records.push_back({"T", {1, 0}});
  records.push_back({"C", {0, 0}});
  records.push_back({"C", {1, 1}});
  const CrossTable t = ingest_subjects(records, "T", "C");
  CHECK(t.k == 2);
  CHECK(t.trt == std::vector<long long>{0, 0, 1, 1});
  CHECK(t.ctr == std::vector<long long>{1, 0, 0, 1});

  records.push_back({"X", {0, 0}});
  CHECK_THROWS_AS(ingest_subjects(records, "T", "C"), std::invalid_argument);
  records.pop_back();
  records.push_back({"T", {0, 2}});
  CHECK_THROWS_AS(ingest_subjects(records, "T", "C"), std::invalid_argument);
  records.pop_back();
  records.push_back({"T", {0}});
  CHECK_THROWS_AS(ingest_subjects(records, "T", "C"), std::invalid_argument);
}

TEST_CASE("csv and aggregated json fixtures describe the same study") {
  std::ifstream csv(fixture("table1.csv"));
  REQUIRE(csv.good());
  const CrossTable from_csv = read_subject_csv(csv, "treatment", "control");

  std::ifstream json_in(fixture("table1.json"));
  REQUIRE(json_in.good());
  const CrossTable from_json = read_aggregated_json(json_in);

  CHECK(from_csv.k == from_json.k);
  CHECK(from_csv.trt == from_json.trt);
  CHECK(from_csv.ctr == from_json.ctr);
  CHECK(margins(from_json).m == std::vector<long long>{2, 11, 25, 137});
}

TEST_CASE("aggregated json round-trips") {
  const CrossTable t = study_table();
  std::stringstream buffer;
  write_aggregated_json(t, buffer);
  const CrossTable back = read_aggregated_json(buffer);
  CHECK(back.k == t.k);
  CHECK(back.trt == t.trt);
  CHECK(back.ctr == t.ctr);
}

TEST_CASE("aggregated json rejects malformed input") {
  std::stringstream missing(R"({"k": 2, "categories": ["11"], "trt": [1], "ctr": [1]})");
  CHECK_THROWS_AS(read_aggregated_json(missing), std::invalid_argument);

  std::stringstream dup(R"({"k": 1, "categories": ["1", "1"], "trt": [1, 2], "ctr": [1, 2]})");
  CHECK_THROWS_AS(read_aggregated_json(dup), std::invalid_argument);

  std::stringstream garbage("not json");
  CHECK_THROWS_AS(read_aggregated_json(garbage), std::invalid_argument);
}

TEST_CASE("endpoint count guard") {
  std::vector<SubjectRecord> records;
  records.push_back({"T", {1, 1, 1, 1, 1}});
  records.push_back({"C", {0, 0, 0, 0, 0}});
  CHECK_THROWS_AS(ingest_subjects(records, "T", "C"), std::invalid_argument);
  CHECK_NOTHROW(ingest_subjects(records, "T", "C", 5));
}
