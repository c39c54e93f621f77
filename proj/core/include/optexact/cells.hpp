#pragma once

#include "optexact/model.hpp"

#include <array>
#include <utility>

namespace optexact {

double normal_cdf(double x);
double normal_quantile(double p);

// P(Z1 <= x, Z2 <= y) for standard bivariate normal with correlation rho,
// evaluated by adaptive quadrature of the conditional normal.
double bivariate_normal_cdf(double x, double y, double rho);

// P(Z1 <= z[0], Z2 <= z[1], Z3 <= z[2]) with pairwise correlations
// r = {r12, r13, r23}.
double trivariate_normal_cdf(const std::array<double, 3>& z, const std::array<double, 3>& r);

// Correlation interval for a pair of binary outcomes with the given success
// rates, derived from the joint-cell positivity bounds.
std::pair<double, double> feasible_rho(double rate_a, double rate_b);

// Joint cell probabilities of k in {1, 2, 3} correlated binary outcomes with
// the given success rates and a common pairwise correlation rho. Two
// outcomes use the closed-form joint success probability; three outcomes
// dichotomize a latent Gaussian vector whose per-pair correlations are solved
// so every pairwise outcome correlation equals rho. Throws
// std::invalid_argument when rho is infeasible, reporting the allowed range.
CellProbabilities cells_from_marginals(const std::vector<double>& rates, double rho);

}  // namespace optexact
