#include "optexact/dist.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

namespace optexact {

namespace {

void check_population(const MarginVector& m) {
  m.validate();
  if (m.n_trt > m.total())
    throw std::invalid_argument("group size exceeds total sample size");
}

// Streaming log-sum-exp accumulator: value() == max_ + log(sum_).
struct LogSum {
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;

  void add(double x) {
    if (sum_ == 0.0) {
      max_ = x;
      sum_ = 1.0;
    } else if (x <= max_) {
      sum_ += std::exp(x - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    }
  }

  double value() const {
    return sum_ == 0.0 ? -std::numeric_limits<double>::infinity() : max_ + std::log(sum_);
  }
};

struct Accumulator {
  BigInt weight;
  LogSum alt;
};

// Walks all per-category treatment counts compatible with the margins,
// calling visit(y, weight) at each leaf. Categories with zero margin are kept
// at zero implicitly by the bounds.
template <typename Visit>
void walk_support(const MarginVector& m, const BinomialTable& binom, long long limit,
                  Visit&& visit) {
  const int d = m.categories();
  std::vector<long long> y(static_cast<std::size_t>(d), 0);
  std::vector<long long> suffix(static_cast<std::size_t>(d) + 1, 0);
  for (int s = d - 1; s >= 0; --s)
    suffix[static_cast<std::size_t>(s)] =
        suffix[static_cast<std::size_t>(s) + 1] + m.m[static_cast<std::size_t>(s)];

  long long count = 0;
  std::vector<BigInt> prefix_weight(static_cast<std::size_t>(d) + 1);
  prefix_weight[0] = 1;

  auto rec = [&](auto&& self, int s, long long remaining) -> void {
    if (s == d) {
      if (++count > limit)
        throw SupportLimitError("conditional support exceeds the enumeration limit of " +
                                std::to_string(limit) + " points");
      visit(y, prefix_weight[static_cast<std::size_t>(d)]);
      return;
    }
    const long long cap = m.m[static_cast<std::size_t>(s)];
    const long long lo = std::max(0LL, remaining - suffix[static_cast<std::size_t>(s) + 1]);
    const long long hi = std::min(cap, remaining);
    for (long long v = lo; v <= hi; ++v) {
      y[static_cast<std::size_t>(s)] = v;
      prefix_weight[static_cast<std::size_t>(s) + 1] =
          prefix_weight[static_cast<std::size_t>(s)] *
          binom(static_cast<int>(cap), static_cast<int>(v));
      self(self, s + 1, remaining - v);
    }
    y[static_cast<std::size_t>(s)] = 0;
  };
  rec(rec, 0, m.n_trt);
}

JointDistribution build_distribution(const MarginVector& collapsed,
                                     const std::vector<int>& endpoints,
                                     const std::vector<double>* log_odds, long long limit) {
  const auto n_int = static_cast<int>(collapsed.total());
  BinomialTable binom(n_int);

  // Group support points by their statistic; exact weights always, the
  // alternative in log space to keep extreme odds stable.
  std::map<StatisticVector, Accumulator> groups;
  const int d = collapsed.categories();
  std::vector<int> full(static_cast<std::size_t>(collapsed.k));
  for (int e = 0; e < collapsed.k; ++e) full[static_cast<std::size_t>(e)] = e;

  walk_support(collapsed, binom, limit, [&](const std::vector<long long>& y, const BigInt& w) {
    StatisticVector t = project(y, collapsed.k, full);
    auto& acc = groups[t];
    acc.weight += w;
    if (log_odds) {
      double lw = std::log(w.convert_to<double>());
      for (int s = 0; s < d; ++s)
        if (y[static_cast<std::size_t>(s)] > 0)
          lw += static_cast<double>(y[static_cast<std::size_t>(s)]) *
                (*log_odds)[static_cast<std::size_t>(s)];
      acc.alt.add(lw);
    }
  });

  JointDistribution dist;
  dist.margin = collapsed;
  dist.endpoints = endpoints;
  dist.total_weight = binom(n_int, static_cast<int>(collapsed.n_trt));
  dist.has_alt = log_odds != nullptr;
  dist.points.reserve(groups.size());
  for (auto& [t, acc] : groups) {
    SupportPoint p;
    p.t = t;
    p.weight = acc.weight;
    p.alt_mass = log_odds ? acc.alt.value() : 0.0;
    dist.points.push_back(std::move(p));
  }

  std::sort(dist.points.begin(), dist.points.end(), [](const SupportPoint& a, const SupportPoint& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.t > b.t;
  });

  if (log_odds) {
    LogSum total;
    for (const auto& p : dist.points) total.add(p.alt_mass);
    const double log_total = total.value();
    dist.log_alt_total = log_total;
    for (auto& p : dist.points) p.alt_mass = std::exp(p.alt_mass - log_total);
  }

  dist.lookup.resize(dist.points.size());
  for (int i = 0; i < dist.size(); ++i) dist.lookup[static_cast<std::size_t>(i)] = i;
  std::sort(dist.lookup.begin(), dist.lookup.end(), [&dist](int a, int b) {
    return dist.points[static_cast<std::size_t>(a)].t < dist.points[static_cast<std::size_t>(b)].t;
  });
  return dist;
}

std::vector<double> odds_to_logs(const OddsVector& odds, const MarginVector& m) {
  if (odds.r.size() != m.m.size())
    throw std::invalid_argument("odds vector must have one entry per category");
  std::vector<double> logs(odds.r.size(), 0.0);
  for (std::size_t s = 0; s < odds.r.size(); ++s) {
    if (m.m[s] == 0) continue;  // empty categories never contribute
    const double r = odds.r[s];
    if (!(r > 0.0) || !std::isfinite(r))
      throw std::invalid_argument("category odds must be positive and finite");
    logs[s] = std::log(r);
  }
  return logs;
}

}  // namespace

int JointDistribution::index_of(const StatisticVector& t) const {
  auto it = std::lower_bound(lookup.begin(), lookup.end(), t, [this](int idx, const StatisticVector& v) {
    return points[static_cast<std::size_t>(idx)].t < v;
  });
  if (it == lookup.end() || points[static_cast<std::size_t>(*it)].t != t) return -1;
  return *it;
}

std::vector<std::vector<long long>> enumerate_support(const MarginVector& m, long long limit) {
  check_population(m);
  BinomialTable binom(static_cast<int>(m.total()));
  std::vector<std::vector<long long>> out;
  walk_support(m, binom, limit,
               [&](const std::vector<long long>& y, const BigInt&) { out.push_back(y); });
  return out;
}

JointDistribution joint_null_distribution(const MarginVector& m, const std::vector<int>& subset,
                                          long long limit) {
  check_population(m);
  const MarginVector collapsed = restrict_margins(m, subset);
  return build_distribution(collapsed, subset, nullptr, limit);
}

JointDistribution joint_alt_distribution(const MarginVector& m, const OddsVector& odds,
                                         long long limit) {
  check_population(m);
  std::vector<int> all(static_cast<std::size_t>(m.k));
  for (int e = 0; e < m.k; ++e) all[static_cast<std::size_t>(e)] = e;
  const auto logs = odds_to_logs(odds, m);
  return build_distribution(m, all, &logs, limit);
}

JointDistribution joint_alt_distribution(const MarginVector& m, const CellProbabilities& q_trt,
                                         const CellProbabilities& q_ctr,
                                         const std::vector<int>& subset, long long limit) {
  check_population(m);
  if (q_trt.k != m.k || q_ctr.k != m.k)
    throw std::invalid_argument("cell probabilities must cover the same endpoints as the margins");
  const MarginVector collapsed = restrict_margins(m, subset);
  const CellProbabilities ct = restrict_cells(q_trt, subset);
  const CellProbabilities cc = restrict_cells(q_ctr, subset);
  OddsVector odds;
  odds.r.resize(ct.q.size(), 1.0);
  for (std::size_t s = 0; s < ct.q.size(); ++s) {
    if (collapsed.m[s] == 0) continue;
    if (!(cc.q[s] > 0.0))
      throw std::invalid_argument("control cell probability must be positive for occupied categories");
    odds.r[s] = ct.q[s] / cc.q[s];
  }
  const auto logs = odds_to_logs(odds, collapsed);
  return build_distribution(collapsed, subset, &logs, limit);
}

BigRat marginal_tail(const MarginVector& m, int endpoint, long long threshold) {
  check_population(m);
  if (endpoint < 0 || endpoint >= m.k) throw std::invalid_argument("endpoint index out of range");
  const MarginVector one = restrict_margins(m, {endpoint});
  const long long successes = one.m[1];
  const long long failures = one.m[0];
  const long long lo = std::max(0LL, one.n_trt - failures);
  const long long hi = std::min(one.n_trt, successes);
  if (threshold <= lo) return BigRat(1);
  if (threshold > hi) return BigRat(0);

  BinomialTable binom(static_cast<int>(one.total()));
  BigInt tail = 0;
  for (long long t = threshold; t <= hi; ++t)
    tail += binom(static_cast<int>(successes), static_cast<int>(t)) *
            binom(static_cast<int>(failures), static_cast<int>(one.n_trt - t));
  return BigRat(tail, binom(static_cast<int>(one.total()), static_cast<int>(one.n_trt)));
}

BigRat fisher_p(const MarginVector& m, int endpoint, long long observed) {
  return marginal_tail(m, endpoint, observed);
}

void dump_distribution_json(const JointDistribution& dist, std::ostream& out) {
  nlohmann::json j;
  j["k"] = dist.k();
  j["endpoints"] = dist.endpoints;
  j["n_trt"] = dist.margin.n_trt;
  j["n_ctr"] = dist.margin.n_ctr;
  j["margins"] = dist.margin.m;
  j["total_weight"] = dist.total_weight.str();
  j["size"] = dist.size();
  j["has_alt"] = dist.has_alt;
  auto points = nlohmann::json::array();
  for (const auto& p : dist.points) {
    nlohmann::json q;
    q["t"] = p.t;
    q["weight"] = p.weight.str();
    if (dist.has_alt) q["alt_mass"] = p.alt_mass;
    points.push_back(std::move(q));
  }
  j["points"] = std::move(points);
  out << j.dump(2) << '\n';
}

}  // namespace optexact
