#include "ptlsi/normal.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace ptlsi::normal {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Lo = -4.8336466567264565186e-17;
constexpr double kTwoOverSqrtPi = 1.1283791670955125739;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// Mills ratio (1 - Phi(x)) / phi(x) for large x by Lentz's continued fraction.
double mills_ratio(double x) {
    constexpr double tiny = 1e-300;
    double f = x;
    double c = x;
    double d = 0.0;
    for (int k = 1; k < 500; ++k) {
        const double a = static_cast<double>(k);
        d = x + a * d;
        if (std::abs(d) < tiny) d = tiny;
        c = x + a / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return 1.0 / f;
}

} // namespace

double pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

namespace {

// erfc(x / sqrt(2)) with a first-order correction for the rounding of the
// argument, which otherwise costs ~t^2 ulps deep in the tail.
double erfc_scaled_arg(double x) {
    const double t = x * kInvSqrt2;
    const double dt = std::fma(x, kInvSqrt2, -t) + x * kInvSqrt2Lo;
    const double e = std::erfc(t);
    if (dt == 0.0 || e == 0.0) return e;
    return e - dt * kTwoOverSqrtPi * std::exp(-t * t);
}

} // namespace

double ccdf(double x) { return 0.5 * erfc_scaled_arg(x); }

double cdf(double x) { return 0.5 * erfc_scaled_arg(-x); }

double log_ccdf(double x) {
    if (std::isinf(x)) {
        return x > 0.0 ? -std::numeric_limits<double>::infinity() : 0.0;
    }
    if (x < -1.0) {
        return std::log1p(-cdf(x));
    }
    if (x < 5.0) {
        return std::log(ccdf(x));
    }
    return -0.5 * x * x - kLogSqrt2Pi + std::log(mills_ratio(x));
}

double log_cdf(double x) { return log_ccdf(-x); }

double quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        return std::numeric_limits<double>::quiet_NaN();
    }
    // Acklam's rational approximation followed by Halley refinement.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    for (int it = 0; it < 2; ++it) {
        // Work on the smaller tail to keep the residual accurate.
        const double e = (x < 0.0) ? cdf(x) - p : (1.0 - p) - ccdf(x);
        const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

double log_interval_mass(double l, double u) {
    if (!(l < u)) {
        return -std::numeric_limits<double>::infinity();
    }
    if (l >= 0.0) {
        // ccdf(l) - ccdf(u)
        const double hi = log_ccdf(l);
        const double lo = log_ccdf(u);
        return hi + std::log1p(-std::exp(lo - hi));
    }
    if (u <= 0.0) {
        return log_interval_mass(-u, -l);
    }
    // Straddles zero: mass >= min(Phi(u) - 1/2, 1/2 - Phi(l)), no cancellation.
    return std::log1p(-(ccdf(u) + ccdf(-l)));
}

} // namespace ptlsi::normal
