#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dbnlc::stats {

/// Upper tail P(X >= x) of the chi-squared distribution with `dof` degrees
/// of freedom, via the regularized incomplete gamma function.
double chi2_sf(double x, long dof);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

double log_sum_exp(std::span<const double> v);

} // namespace dbnlc::stats
