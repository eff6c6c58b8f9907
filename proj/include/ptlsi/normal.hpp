#pragma once

namespace ptlsi::normal {

double pdf(double x);
double cdf(double x);
/// Upper tail 1 - Phi(x), accurate in the far right tail.
double ccdf(double x);
/// log(1 - Phi(x)); finite for every finite x.
double log_ccdf(double x);
/// log Phi(x).
double log_cdf(double x);
/// Phi^{-1}(p) for p in (0, 1).
double quantile(double p);

/// log(Phi(u) - Phi(l)) for l <= u, evaluated on the side of zero where
/// no cancellation occurs. Returns -inf for empty or zero-mass intervals.
double log_interval_mass(double l, double u);

} // namespace ptlsi::normal
