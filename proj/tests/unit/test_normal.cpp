#include "ptlsi/normal.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

namespace nrm = ptlsi::normal;

namespace {

struct Ref {
    double x, cdf, ccdf, log_cdf;
};

// High-precision reference values (50 significant digits, rounded).
constexpr Ref kTable[] = {
    {-40, 0.0, 1.0, -804.60844201375379},
    {-37.5, 4.6053530095819548e-308, 1.0, -707.66898931750719},
    {-30, 4.9067139271481871e-198, 1.0, -454.3212439563432},
    {-20, 2.7536241186062337e-89, 1.0, -203.91715537109726},
    {-12.3, 4.5287069561587847e-35, 1.0, -79.080041796183996},
    {-8, 6.2209605742717841e-16, 0.99999999999999938, -35.01343715991455},
    {-5, 2.8665157187919391e-7, 0.99999971334842812, -15.064998393988726},
    {-2.5, 6.2096653257761352e-3, 0.99379033467422386, -5.0816482772786905},
    {-1, 1.5865525393145705e-1, 0.84134474606854295, -1.8410216450092635},
    {-0.3, 3.8208857781104737e-1, 0.61791142218895263, -0.96210281816885066},
    {0, 0.5, 0.5, -0.69314718055994531},
    {0.7, 7.5803634777692697e-1, 0.24196365222307303, -0.27702394227713126},
    {1.96, 9.7500210485177956e-1, 0.024997895148220436, -0.025315649164282115},
    {3, 9.9865010196836991e-1, 0.0013498980316300945, -0.0013508099647481938},
    {6, 9.9999999901341235e-1, 9.8658764503769814e-10, -9.8658764552437573e-10},
    {9, 1.0, 1.1285884059538406e-19, -1.1285884059538406e-19},
    {15, 1.0, 3.6709661993127509e-51, -3.6709661993127509e-51},
};

bool rel_close(double got, double want, double tol) {
    if (want == 0.0) return std::abs(got) <= tol;
    return std::abs(got - want) <= tol * std::abs(want);
}

} // namespace

TEST_SUITE("normal") {

TEST_CASE("cdf and tails match high-precision references") {
    for (const auto& r : kTable) {
        CAPTURE(r.x);
        if (r.cdf > 1e-300) CHECK(rel_close(nrm::cdf(r.x), r.cdf, 1e-14));
        if (r.ccdf > 1e-300) CHECK(rel_close(nrm::ccdf(r.x), r.ccdf, 1e-14));
        CHECK(rel_close(nrm::log_cdf(r.x), r.log_cdf, 1e-13));
        CHECK(rel_close(nrm::log_ccdf(-r.x), r.log_cdf, 1e-13));
    }
}

TEST_CASE("familiar values") {
    CHECK(nrm::cdf(1.96) == doctest::Approx(0.97500210485177956).epsilon(1e-15));
    CHECK(nrm::cdf(-1.0) == doctest::Approx(0.15865525393145705).epsilon(1e-15));
    CHECK(nrm::log_cdf(-10.0) == doctest::Approx(-53.231285150512470578).epsilon(1e-14));
    CHECK(nrm::log_cdf(8.5) == doctest::Approx(-9.4795348222033183991e-18).epsilon(1e-12));
    CHECK(nrm::pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-15));
}

TEST_CASE("log_cdf stays finite far in the left tail") {
    CHECK(std::isfinite(nrm::log_cdf(-40.0)));
    CHECK(std::isfinite(nrm::log_cdf(-1e3)));
    CHECK(nrm::log_cdf(-40.0) == doctest::Approx(-804.60844201375378817).epsilon(1e-14));
}

TEST_CASE("quantile") {
    CHECK(nrm::quantile(0.975) == doctest::Approx(1.9599639845400542355).epsilon(1e-14));
    CHECK(nrm::quantile(1e-10) == doctest::Approx(-6.3613409024040562047).epsilon(1e-13));
    CHECK(nrm::quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-37.0, 0.0);
    for (int i = 0; i < 500; ++i) {
        const double x = u(rng);
        CHECK(nrm::quantile(nrm::cdf(x)) == doctest::Approx(x).epsilon(1e-9));
    }
    for (double p : {1e-5, 0.01, 0.2, 0.4}) CHECK(nrm::quantile(1.0 - p) == doctest::Approx(-nrm::quantile(p)).epsilon(1e-9));
}

TEST_CASE("log_interval_mass") {
    CHECK(nrm::log_interval_mass(-31.0, -30.0) == doctest::Approx(-454.32124395634325204).epsilon(1e-13));
    CHECK(nrm::log_interval_mass(11.0, 12.0) == doctest::Approx(-63.824943392209687008).epsilon(1e-13));
    CHECK(nrm::log_interval_mass(-0.25, 0.5) == doctest::Approx(-1.2372925013224502363).epsilon(1e-14));
    CHECK(nrm::log_interval_mass(-INFINITY, INFINITY) == doctest::Approx(0.0));
    CHECK(std::isinf(nrm::log_interval_mass(1.0, 1.0)));
    CHECK(nrm::log_interval_mass(1.0, 1.0) < 0);
}

TEST_CASE("symmetry and monotonicity") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    for (int i = 0; i < 300; ++i) {
        const double x = u(rng), y = u(rng);
        CHECK(nrm::cdf(x) + nrm::cdf(-x) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(nrm::ccdf(x) == doctest::Approx(nrm::cdf(-x)).epsilon(1e-14));
        if (x < y) CHECK(nrm::cdf(x) <= nrm::cdf(y));
    }
}

}
