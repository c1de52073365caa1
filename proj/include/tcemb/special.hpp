#pragma once

namespace tcemb {

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// Two-sided tail probability of Student's t with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

/// Inverse standard-normal CDF. Acklam's rational approximation with one
/// Halley refinement step; accurate to ~1e-14 over (0, 1).
double normal_quantile(double p);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace tcemb
