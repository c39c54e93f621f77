#include "optexact/cells.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace optexact {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;
constexpr double kTailCut = 8.5;  // below this the standard normal mass is < 1e-17

double phi(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

const boost::math::normal_distribution<double>& unit_normal() {
  static const boost::math::normal_distribution<double> dist(0.0, 1.0);
  return dist;
}

void check_rate(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::invalid_argument("success rates must lie strictly between 0 and 1");
}

std::string range_string(const std::pair<double, double>& r) {
  std::ostringstream os;
  os.precision(6);
  os << '[' << r.first << ", " << r.second << ']';
  return os.str();
}

// Correlation of the latent Gaussian pair that yields the target joint
// success probability after dichotomizing at the marginal quantiles.
double solve_latent_correlation(double za, double zb, double target) {
  const double lo = -1.0 + 1e-10, hi = 1.0 - 1e-10;
  auto f = [&](double r) { return bivariate_normal_cdf(za, zb, r) - target; };
  const double flo = f(lo), fhi = f(hi);
  if (flo > 0.0 || fhi < 0.0)
    throw std::invalid_argument("latent correlation out of range for the requested cells");
  boost::math::tools::eps_tolerance<double> tol(45);
  std::uintmax_t max_iter = 200;
  const auto bracket = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, max_iter);
  return 0.5 * (bracket.first + bracket.second);
}

}  // namespace

double normal_cdf(double x) { return boost::math::cdf(unit_normal(), x); }

double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::invalid_argument("quantile argument must lie strictly between 0 and 1");
  return boost::math::quantile(unit_normal(), p);
}

double bivariate_normal_cdf(double x, double y, double rho) {
  if (!(rho >= -1.0 && rho <= 1.0))
    throw std::invalid_argument("correlation must lie in [-1, 1]");
  if (rho >= 1.0 - 1e-12) return normal_cdf(std::min(x, y));
  if (rho <= -1.0 + 1e-12) return std::max(0.0, normal_cdf(x) + normal_cdf(y) - 1.0);
  if (x <= -kTailCut || y <= -kTailCut) return 0.0;
  if (x >= kTailCut) return normal_cdf(y);
  if (y >= kTailCut) return normal_cdf(x);

  const double s = std::sqrt(1.0 - rho * rho);
  auto integrand = [&](double u) { return phi(u) * normal_cdf((y - rho * u) / s); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, -kTailCut, x, 12, 1e-12);
}

double trivariate_normal_cdf(const std::array<double, 3>& z, const std::array<double, 3>& r) {
  const double r12 = r[0], r13 = r[1], r23 = r[2];
  for (double v : r)
    if (!(std::abs(v) < 1.0 - 1e-9))
      throw std::invalid_argument("pairwise latent correlations must lie strictly inside (-1, 1)");
  // Positive semidefiniteness of the 3x3 correlation matrix.
  const double det = 1.0 - r12 * r12 - r13 * r13 - r23 * r23 + 2.0 * r12 * r13 * r23;
  if (det < -1e-9)
    throw std::invalid_argument("latent correlation matrix is not positive semidefinite");

  if (z[0] <= -kTailCut || z[1] <= -kTailCut || z[2] <= -kTailCut) return 0.0;
  if (z[0] >= kTailCut) return bivariate_normal_cdf(z[1], z[2], r23);

  const double s12 = std::sqrt(1.0 - r12 * r12);
  const double s13 = std::sqrt(1.0 - r13 * r13);
  const double rc = std::clamp((r23 - r12 * r13) / (s12 * s13), -1.0, 1.0);

  // Condition on the first coordinate; the remaining pair is bivariate
  // normal with shifted means and the partial correlation rc.
  auto integrand = [&](double u) {
    return phi(u) *
           bivariate_normal_cdf((z[1] - r12 * u) / s12, (z[2] - r13 * u) / s13, rc);
  };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, -kTailCut, z[0], 12, 1e-11);
}

std::pair<double, double> feasible_rho(double rate_a, double rate_b) {
  check_rate(rate_a);
  check_rate(rate_b);
  const double scale = std::sqrt(rate_a * (1.0 - rate_a) * rate_b * (1.0 - rate_b));
  const double lo_cell = std::max(0.0, rate_a + rate_b - 1.0);
  const double hi_cell = std::min(rate_a, rate_b);
  return {(lo_cell - rate_a * rate_b) / scale, (hi_cell - rate_a * rate_b) / scale};
}

CellProbabilities cells_from_marginals(const std::vector<double>& rates, double rho) {
  const int k = static_cast<int>(rates.size());
  if (k < 1 || k > 3)
    throw std::invalid_argument("cell construction supports one to three endpoints");
  for (double p : rates) check_rate(p);
  if (k == 1 && rho != 0.0)
    throw std::invalid_argument("a single endpoint admits no correlation");

  CellProbabilities cells;
  cells.k = k;
  cells.q.assign(static_cast<std::size_t>(1) << k, 0.0);

  if (k == 1) {
    cells.q[0] = 1.0 - rates[0];
    cells.q[1] = rates[0];
    cells.validate();
    return cells;
  }

  // Pairwise joint success probabilities requested by the common correlation.
  auto joint_success = [&](int a, int b) {
    const auto range = feasible_rho(rates[static_cast<std::size_t>(a)],
                                    rates[static_cast<std::size_t>(b)]);
    if (rho < range.first - 1e-12 || rho > range.second + 1e-12)
      throw std::invalid_argument(
          "correlation " + std::to_string(rho) + " is infeasible for endpoints " +
          std::to_string(a + 1) + " and " + std::to_string(b + 1) + "; the feasible range is " +
          range_string(range));
    return rates[static_cast<std::size_t>(a)] * rates[static_cast<std::size_t>(b)] +
           rho * std::sqrt(rates[static_cast<std::size_t>(a)] *
                           (1.0 - rates[static_cast<std::size_t>(a)]) *
                           rates[static_cast<std::size_t>(b)] *
                           (1.0 - rates[static_cast<std::size_t>(b)]));
  };

  if (k == 2) {
    const double p1 = rates[0], p2 = rates[1];
    const double q11 = joint_success(0, 1);
    cells.q[3] = q11;              // pattern 11
    cells.q[2] = p1 - q11;         // pattern 10
    cells.q[1] = p2 - q11;         // pattern 01
    cells.q[0] = 1.0 - p1 - p2 + q11;
  } else {
    // Dichotomized latent Gaussian: solve one latent correlation per pair so
    // each pairwise outcome correlation hits rho exactly.
    std::array<double, 3> zq{};
    for (int e = 0; e < 3; ++e)
      zq[static_cast<std::size_t>(e)] = normal_quantile(rates[static_cast<std::size_t>(e)]);

    std::array<double, 3> latent{};  // order (1,2), (1,3), (2,3)
    const std::array<std::pair<int, int>, 3> pairs{{{0, 1}, {0, 2}, {1, 2}}};
    for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
      const auto [a, b] = pairs[idx];
      latent[idx] = solve_latent_correlation(zq[static_cast<std::size_t>(a)],
                                             zq[static_cast<std::size_t>(b)],
                                             joint_success(a, b));
    }

    // Lower orthant probabilities for every subset of coordinates.
    std::array<double, 8> orthant{};
    orthant[0] = 1.0;
    for (int bits = 1; bits < 8; ++bits) {
      std::vector<int> members;
      for (int e = 0; e < 3; ++e)
        if (bits & (1 << e)) members.push_back(e);
      if (members.size() == 1) {
        orthant[static_cast<std::size_t>(bits)] =
            normal_cdf(zq[static_cast<std::size_t>(members[0])]);
      } else if (members.size() == 2) {
        const int a = members[0], b = members[1];
        const std::size_t pair_idx = (a == 0 && b == 1) ? 0 : (a == 0 ? 1 : 2);
        orthant[static_cast<std::size_t>(bits)] =
            bivariate_normal_cdf(zq[static_cast<std::size_t>(a)],
                                 zq[static_cast<std::size_t>(b)], latent[pair_idx]);
      } else {
        orthant[static_cast<std::size_t>(bits)] = trivariate_normal_cdf(zq, latent);
      }
    }

    // Success on endpoint e means the latent coordinate fell at or below its
    // quantile; inclusion-exclusion over the failed coordinates gives cells.
    for (int index = 0; index < 8; ++index) {
      int ones = 0;
      for (int e = 0; e < 3; ++e)
        if ((index >> (2 - e)) & 1) ones |= 1 << e;
      const int zeros = 7 & ~ones;
      double cell = 0.0;
      for (int sub = zeros;; sub = (sub - 1) & zeros) {
        const int sign = (std::popcount(static_cast<unsigned>(sub)) % 2 == 0) ? 1 : -1;
        cell += sign * orthant[static_cast<std::size_t>(ones | sub)];
        if (sub == 0) break;
      }
      cells.q[static_cast<std::size_t>(index)] = cell;
    }
  }

  double sum = 0.0;
  for (double& v : cells.q) {
    if (v < -1e-9)
      throw std::invalid_argument("correlation produces a negative cell probability");
    v = std::max(v, 0.0);
    sum += v;
  }
  for (double& v : cells.q) v /= sum;
  cells.validate();
  return cells;
}

}  // namespace optexact
