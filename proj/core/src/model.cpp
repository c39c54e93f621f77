#include "optexact/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace optexact {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

void check_endpoint_count(int k, int max_endpoints) {
  require(k >= 1, "at least one endpoint is required");
  require(k <= max_endpoints,
          "dataset has " + std::to_string(k) + " endpoints, above the limit of " +
              std::to_string(max_endpoints) + "; raise the endpoint limit to accept it");
}

// Maps a category index of the full k-endpoint table to the index of the
// collapsed table keeping only the endpoints in subset.
int collapse_index(int index, int k, const std::vector<int>& subset) {
  int out = 0;
  for (int e : subset) out = (out << 1) | ((index >> (k - 1 - e)) & 1);
  return out;
}

void check_subset(int k, const std::vector<int>& subset) {
  require(!subset.empty(), "endpoint subset must be non-empty");
  for (std::size_t i = 0; i < subset.size(); ++i) {
    require(subset[i] >= 0 && subset[i] < k, "endpoint index out of range");
    if (i > 0) require(subset[i] > subset[i - 1], "endpoint subset must be strictly increasing");
  }
}

}  // namespace

std::vector<int> pattern_of_category(int index, int k) {
  std::vector<int> bits(static_cast<std::size_t>(k));
  for (int e = 0; e < k; ++e) bits[static_cast<std::size_t>(e)] = (index >> (k - 1 - e)) & 1;
  return bits;
}

int category_of_pattern(const std::vector<int>& pattern) {
  int index = 0;
  for (int b : pattern) {
    if (b != 0 && b != 1) throw std::invalid_argument("category pattern bits must be 0 or 1");
    index = (index << 1) | b;
  }
  return index;
}

std::string pattern_string(int index, int k) {
  std::string s(static_cast<std::size_t>(k), '0');
  for (int e = 0; e < k; ++e)
    if ((index >> (k - 1 - e)) & 1) s[static_cast<std::size_t>(e)] = '1';
  return s;
}

long long CrossTable::n_trt() const {
  long long n = 0;
  for (long long c : trt) n += c;
  return n;
}

long long CrossTable::n_ctr() const {
  long long n = 0;
  for (long long c : ctr) n += c;
  return n;
}

void CrossTable::validate() const {
  require(k >= 1, "table must have at least one endpoint");
  const auto d = static_cast<std::size_t>(categories());
  require(trt.size() == d && ctr.size() == d,
          "count vectors must have one entry per category (2^k)");
  for (long long c : trt) require(c >= 0, "negative treatment count");
  for (long long c : ctr) require(c >= 0, "negative control count");
  require(n_trt() > 0, "treatment arm is empty");
  require(n_ctr() > 0, "control arm is empty");
}

void MarginVector::validate() const {
  require(k >= 1, "margins must cover at least one endpoint");
  require(m.size() == static_cast<std::size_t>(categories()),
          "margin vector must have one entry per category (2^k)");
  long long sum = 0;
  for (long long c : m) {
    require(c >= 0, "negative category margin");
    sum += c;
  }
  require(n_trt > 0 && n_ctr > 0, "group sizes must be positive");
  require(sum == total(), "category margins must sum to the total sample size");
}

void CellProbabilities::validate() const {
  require(k >= 1, "cell probabilities must cover at least one endpoint");
  require(q.size() == static_cast<std::size_t>(categories()),
          "cell probabilities must have one entry per category (2^k)");
  double sum = 0.0;
  for (double v : q) {
    require(v >= -1e-12, "negative cell probability");
    sum += v;
  }
  require(std::abs(sum - 1.0) <= 1e-9, "cell probabilities must sum to one");
}

CrossTable ingest_subjects(const std::vector<SubjectRecord>& records,
                           const std::string& treatment_label,
                           const std::string& control_label, int max_endpoints) {
  require(!records.empty(), "no subject records");
  require(treatment_label != control_label, "group labels must differ");
  const int k = static_cast<int>(records.front().outcomes.size());
  check_endpoint_count(k, max_endpoints);

  CrossTable table;
  table.k = k;
  table.trt.assign(static_cast<std::size_t>(table.categories()), 0);
  table.ctr.assign(static_cast<std::size_t>(table.categories()), 0);

  for (std::size_t row = 0; row < records.size(); ++row) {
    const auto& rec = records[row];
    require(static_cast<int>(rec.outcomes.size()) == k,
            "subject row " + std::to_string(row + 1) + " has a different endpoint count");
    const int index = category_of_pattern(rec.outcomes);
    if (rec.group == treatment_label) {
      ++table.trt[static_cast<std::size_t>(index)];
    } else if (rec.group == control_label) {
      ++table.ctr[static_cast<std::size_t>(index)];
    } else {
      throw std::invalid_argument("subject row " + std::to_string(row + 1) +
                                  " has unknown group label '" + rec.group + "'");
    }
  }
  table.validate();
  return table;
}

CrossTable read_subject_csv(std::istream& in, const std::string& treatment_label,
                            const std::string& control_label, int max_endpoints) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "empty CSV input");
  const auto header = split_csv_line(line);
  require(header.size() >= 2 && header.front() == "group", "CSV header must start with 'group'");
  const int k = static_cast<int>(header.size()) - 1;
  check_endpoint_count(k, max_endpoints);
  for (int e = 0; e < k; ++e)
    require(header[static_cast<std::size_t>(e + 1)] == "ep" + std::to_string(e + 1),
            "CSV endpoint columns must be named ep1..ep" + std::to_string(k));

  std::vector<SubjectRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    require(fields.size() == header.size(),
            "CSV line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                " fields, expected " + std::to_string(header.size()));
    SubjectRecord rec;
    rec.group = fields.front();
    for (int e = 0; e < k; ++e) {
      const std::string& v = fields[static_cast<std::size_t>(e + 1)];
      require(v == "0" || v == "1",
              "CSV line " + std::to_string(line_no) + ": outcome values must be 0 or 1");
      rec.outcomes.push_back(v == "1" ? 1 : 0);
    }
    records.push_back(std::move(rec));
  }
  return ingest_subjects(records, treatment_label, control_label, max_endpoints);
}

CrossTable read_aggregated_json(std::istream& in, int max_endpoints) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed JSON dataset: ") + e.what());
  }
  require(j.is_object() && j.contains("k") && j.contains("categories") && j.contains("trt") &&
              j.contains("ctr"),
          "JSON dataset must contain k, categories, trt and ctr");
  const int k = j.at("k").get<int>();
  check_endpoint_count(k, max_endpoints);

  const auto& cats = j.at("categories");
  const auto& trt = j.at("trt");
  const auto& ctr = j.at("ctr");
  const auto d = static_cast<std::size_t>(1) << k;
  require(cats.is_array() && cats.size() == d, "JSON dataset must list all 2^k categories");
  require(trt.is_array() && trt.size() == d && ctr.is_array() && ctr.size() == d,
          "JSON count arrays must match the category list");

  CrossTable table;
  table.k = k;
  table.trt.assign(d, -1);
  table.ctr.assign(d, -1);
  for (std::size_t pos = 0; pos < d; ++pos) {
    const std::string pat = cats[pos].get<std::string>();
    require(pat.size() == static_cast<std::size_t>(k), "category pattern has wrong length");
    std::vector<int> bits;
    for (char c : pat) {
      require(c == '0' || c == '1', "category pattern must consist of 0/1 characters");
      bits.push_back(c == '1' ? 1 : 0);
    }
    const auto index = static_cast<std::size_t>(category_of_pattern(bits));
    require(table.trt[index] < 0, "duplicate category pattern '" + pat + "'");
    table.trt[index] = trt[pos].get<long long>();
    table.ctr[index] = ctr[pos].get<long long>();
  }
  table.validate();
  return table;
}

void write_aggregated_json(const CrossTable& table, std::ostream& out) {
  table.validate();
  nlohmann::json j;
  j["k"] = table.k;
  auto cats = nlohmann::json::array();
  auto trt = nlohmann::json::array();
  auto ctr = nlohmann::json::array();
  for (int index = table.categories() - 1; index >= 0; --index) {
    cats.push_back(pattern_string(index, table.k));
    trt.push_back(table.trt[static_cast<std::size_t>(index)]);
    ctr.push_back(table.ctr[static_cast<std::size_t>(index)]);
  }
  j["categories"] = std::move(cats);
  j["trt"] = std::move(trt);
  j["ctr"] = std::move(ctr);
  out << j.dump(2) << '\n';
}

MarginVector margins(const CrossTable& table) {
  table.validate();
  MarginVector m;
  m.k = table.k;
  m.n_trt = table.n_trt();
  m.n_ctr = table.n_ctr();
  m.m.resize(table.trt.size());
  for (std::size_t i = 0; i < table.trt.size(); ++i) m.m[i] = table.trt[i] + table.ctr[i];
  return m;
}

StatisticVector project(const std::vector<long long>& y, int k, const std::vector<int>& subset) {
  require(y.size() == (static_cast<std::size_t>(1) << k),
          "per-category vector must have 2^k entries");
  check_subset(k, subset);
  StatisticVector t(subset.size(), 0);
  for (std::size_t index = 0; index < y.size(); ++index)
    for (std::size_t pos = 0; pos < subset.size(); ++pos)
      if ((index >> (k - 1 - subset[pos])) & 1)
        t[pos] += static_cast<int>(y[index]);
  return t;
}

MarginVector restrict_margins(const MarginVector& m, const std::vector<int>& subset) {
  m.validate();
  check_subset(m.k, subset);
  MarginVector out;
  out.k = static_cast<int>(subset.size());
  out.n_trt = m.n_trt;
  out.n_ctr = m.n_ctr;
  out.m.assign(static_cast<std::size_t>(out.categories()), 0);
  for (int index = 0; index < m.categories(); ++index)
    out.m[static_cast<std::size_t>(collapse_index(index, m.k, subset))] +=
        m.m[static_cast<std::size_t>(index)];
  return out;
}

CellProbabilities restrict_cells(const CellProbabilities& cells, const std::vector<int>& subset) {
  cells.validate();
  check_subset(cells.k, subset);
  CellProbabilities out;
  out.k = static_cast<int>(subset.size());
  out.q.assign(static_cast<std::size_t>(out.categories()), 0.0);
  for (int index = 0; index < cells.categories(); ++index)
    out.q[static_cast<std::size_t>(collapse_index(index, cells.k, subset))] +=
        cells.q[static_cast<std::size_t>(index)];
  return out;
}

}  // namespace optexact
