#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace optexact {

// Hard cap on the number of binary endpoints handled per dataset unless the
// caller raises it explicitly; the joint support grows too fast beyond this.
inline constexpr int kDefaultMaxEndpoints = 4;

// A joint-outcome category for k binary endpoints is identified by the bit
// pattern (s_1, ..., s_k) of the endpoint indicators; s_1 is the most
// significant bit of the category index. For k = 2 the indices 0..3 carry the
// patterns 00, 01, 10, 11.
std::vector<int> pattern_of_category(int index, int k);
int category_of_pattern(const std::vector<int>& pattern);
std::string pattern_string(int index, int k);

// Per-category subject counts of a two-arm trial.
struct CrossTable {
  int k = 0;
  std::vector<long long> trt;  // size 2^k, indexed by category
  std::vector<long long> ctr;  // size 2^k

  int categories() const { return 1 << k; }
  long long n_trt() const;
  long long n_ctr() const;

  // Throws std::invalid_argument when sizes or counts are inconsistent.
  void validate() const;
};

// Pooled per-category margins together with the fixed group sizes; this is
// the conditioning information of the exact tests.
struct MarginVector {
  int k = 0;
  std::vector<long long> m;  // size 2^k, pooled category counts
  long long n_trt = 0;
  long long n_ctr = 0;

  int categories() const { return 1 << k; }
  long long total() const { return n_trt + n_ctr; }
  void validate() const;

  bool operator==(const MarginVector&) const = default;
};

// Joint cell probabilities of one arm; q[index] is the probability of the
// category with that index, and the entries sum to one.
struct CellProbabilities {
  int k = 0;
  std::vector<double> q;  // size 2^k

  int categories() const { return 1 << k; }
  void validate() const;
};

// Per-endpoint success-count statistic, ordered by endpoint.
using StatisticVector = std::vector<int>;

struct SubjectRecord {
  std::string group;
  std::vector<int> outcomes;  // one 0/1 entry per endpoint
};

// Builds the cross table from subject-level records. Group labels must match
// one of the two declared labels exactly; outcome values must be 0 or 1.
CrossTable ingest_subjects(const std::vector<SubjectRecord>& records,
                           const std::string& treatment_label,
                           const std::string& control_label,
                           int max_endpoints = kDefaultMaxEndpoints);

// Reads subject-level CSV with header "group,ep1,...,epk".
CrossTable read_subject_csv(std::istream& in, const std::string& treatment_label,
                            const std::string& control_label,
                            int max_endpoints = kDefaultMaxEndpoints);

// Reads an aggregated dataset {"k":., "categories":[...], "trt":[...], "ctr":[...]}
// where "categories" lists the bit patterns the count vectors are ordered by.
CrossTable read_aggregated_json(std::istream& in, int max_endpoints = kDefaultMaxEndpoints);
void write_aggregated_json(const CrossTable& table, std::ostream& out);

MarginVector margins(const CrossTable& table);

// Success counts per kept endpoint implied by per-category counts y (one
// entry per category of a k-endpoint table); subset holds 0-based endpoint
// indices in increasing order.
StatisticVector project(const std::vector<long long>& y, int k, const std::vector<int>& subset);

// Collapses categories onto the endpoints in subset (0-based, increasing).
MarginVector restrict_margins(const MarginVector& m, const std::vector<int>& subset);
CellProbabilities restrict_cells(const CellProbabilities& cells, const std::vector<int>& subset);

}  // namespace optexact
