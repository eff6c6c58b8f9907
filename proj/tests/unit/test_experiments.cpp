#include "ptlsi/errors.hpp"
#include "ptlsi/experiments.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace ptlsi;

namespace {

SimulationSpec small_sim(bool null_target) {
    SimulationSpec s;
    s.data = SyntheticSpec::desk();
    s.data.p = 15;
    s.data.n_target = 20;
    s.data.n_source = 25;
    s.data.null_target = null_target;
    s.methods = all_methods();
    s.trials = 8;
    s.master_seed = 99;
    return s;
}

} // namespace

TEST_SUITE("experiments") {

TEST_CASE("noise families are standardized") {
    for (NoiseFamily f : {NoiseFamily::Gaussian, NoiseFamily::Laplace, NoiseFamily::SkewNormal, NoiseFamily::StudentT}) {
        CAPTURE(to_string(f));
        std::mt19937_64 rng(12345);
        const int n = 100000;
        double sum = 0, sq = 0;
        for (int i = 0; i < n; ++i) {
            const double x = draw_noise(f, rng);
            sum += x;
            sq += x * x;
        }
        const double mean = sum / n;
        const double var = sq / n - mean * mean;
        CHECK(std::abs(mean) < 0.02);
        CHECK(std::abs(var - 1.0) < 0.05);
        CHECK(parse_noise_family(to_string(f)) == f);
    }
    CHECK_THROWS_AS(parse_noise_family("cauchy"), ValidationError);
}

TEST_CASE("skew-normal draws are right-skewed") {
    std::mt19937_64 rng(4);
    const int n = 100000;
    double m3 = 0;
    for (int i = 0; i < n; ++i) m3 += std::pow(draw_noise(NoiseFamily::SkewNormal, rng), 3);
    // Skewness of a shape-10 skew-normal is about 0.956.
    CHECK(m3 / n == doctest::Approx(0.956).epsilon(0.08));
}

TEST_CASE("preset defaults") {
    const SyntheticSpec p = SyntheticSpec::paper();
    CHECK(p.p == 300);
    CHECK(p.n_source == 100);
    CHECK(p.n_target == 50);
    CHECK(p.informative == 3);
    CHECK(p.uninformative == 2);
    CHECK(p.gamma == 0.5);
    CHECK(p.upsilon == 0.01);
    const SyntheticSpec d = SyntheticSpec::desk();
    CHECK(d.p == 50);
    CHECK(d.n_target == 30);
    CHECK(d.n_source == 40);
    CHECK(d.source_count() == 3);
}

TEST_CASE("generator shapes and coefficient pattern") {
    SyntheticSpec s = SyntheticSpec::desk();
    s.upsilon = 0.0;
    s.null_target = false;
    s.seed = 5;
    const SyntheticData sd = generate(s);
    CHECK(sd.data.target.design.rows() == 30);
    CHECK(sd.data.target.design.cols() == 50);
    CHECK(sd.data.sources.size() == 3);
    CHECK(sd.data.sources[0].design.rows() == 40);
    CHECK(sd.data.target.covariance.isIdentity());
    CHECK(sd.informative == std::vector<Index>{0, 1});
    VectorXd pattern = VectorXd::Zero(50);
    pattern.head(5).setConstant(0.5);
    pattern[0] = -0.5;
    for (const auto& b : sd.source_betas) CHECK(b == pattern);
    VectorXd target = VectorXd::Zero(50);
    target.head(5).setConstant(0.5);
    CHECK(sd.target_beta == target);

    s.upsilon = 0.01;
    const SyntheticData pert = generate(s);
    // Informative sources are perturbed on 1..25 only; uninformative on 1..50.
    CHECK((pert.source_betas[0] - pattern).tail(25).isZero());
    CHECK_FALSE((pert.source_betas[0] - pattern).head(25).isZero());
    CHECK_FALSE((pert.source_betas[2] - pattern).tail(25).isZero());
}

TEST_CASE("null mode and zero-signal mode generate the same data") {
    SyntheticSpec a = SyntheticSpec::desk();
    a.seed = 17;
    SyntheticSpec b = a;
    b.null_target = false;
    b.gamma = 0.0;
    const SyntheticData da = generate(a), db = generate(b);
    CHECK(da.target_beta == db.target_beta);
    CHECK(da.data.target.response == db.data.target.response);
    CHECK(da.data.sources[1].design == db.data.sources[1].design);
    CHECK(generate(a).data.target.design == da.data.target.design);
}

TEST_CASE("spec validation and parameters") {
    SyntheticSpec s = SyntheticSpec::desk();
    set_parameter(s, "n_target", 60);
    CHECK(s.n_target == 60);
    set_parameter(s, "gamma", 1.0);
    CHECK(s.gamma == 1.0);
    CHECK_THROWS_AS(set_parameter(s, "n_target", 2.5), ValidationError);
    CHECK_THROWS_AS(set_parameter(s, "bogus", 1.0), ValidationError);
    s.gamma = -1;
    CHECK_THROWS_AS(validate(s), ValidationError);
}

TEST_CASE("Wilson interval") {
    for (auto [r, n] : {std::pair<std::size_t, std::size_t>{0, 10}, {5, 100}, {50, 100}, {100, 100}, {1, 3}}) {
        const RateEstimate e = make_rate(r, n);
        CHECK(e.rate == doctest::Approx(double(r) / double(n)));
        CHECK(e.ci_low <= e.rate);
        CHECK(e.ci_high >= e.rate);
        CHECK(e.ci_low >= 0.0);
        CHECK(e.ci_high <= 1.0);
    }
    const RateEstimate e = make_rate(50, 100);
    CHECK(e.ci_low == doctest::Approx(0.4038).epsilon(1e-3));
    CHECK(e.ci_high == doctest::Approx(0.5962).epsilon(1e-3));
    const RateEstimate none = make_rate(0, 0);
    CHECK(none.rate == 0.0);
}

TEST_CASE("trial seeds") {
    CHECK(trial_seed(1, 0) == trial_seed(1, 0));
    CHECK(trial_seed(1, 0) != trial_seed(1, 1));
    CHECK(trial_seed(1, 0) != trial_seed(2, 0));
}

TEST_CASE("simulation is deterministic and thread-count invariant") {
    SimulationSpec s = small_sim(true);
    s.threads = 1;
    const SimulationResult a = simulate(s);
    s.threads = 3;
    const SimulationResult b = simulate(s);
    REQUIRE(a.trials.size() == 8);
    REQUIRE(b.trials.size() == 8);
    for (std::size_t t = 0; t < a.trials.size(); ++t) {
        CHECK(a.trials[t].seed == b.trials[t].seed);
        REQUIRE(a.trials[t].records.size() == b.trials[t].records.size());
        for (std::size_t i = 0; i < a.trials[t].records.size(); ++i) {
            CHECK(a.trials[t].records[i].p == b.trials[t].records[i].p);
            CHECK(a.trials[t].records[i].feature == b.trials[t].records[i].feature);
        }
    }
    for (Method m : all_methods()) {
        const RateEstimate ra = rejection_rate(a, m, 0.05, true);
        const RateEstimate rb = rejection_rate(b, m, 0.05, true);
        CHECK(ra.rejections == rb.rejections);
        CHECK(ra.trials == rb.trials);
        CHECK(rejection_rate(a, m, 0.0, true).rejections == 0);
        for (double p : collect_p_values(a, m, true)) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }
    // In null mode every tested feature is null.
    CHECK(rejection_rate(a, Method::Naive, 0.05, false).trials == 0);
}

TEST_CASE("rate estimators check the mode") {
    CHECK_THROWS_AS(estimate_fpr(small_sim(false), Method::Naive, 0.05), ValidationError);
    CHECK_THROWS_AS(estimate_tpr(small_sim(true), Method::Naive, 0.05), ValidationError);
    SimulationSpec s = small_sim(false);
    s.methods = {Method::Selective, Method::Naive};
    const RateEstimate t = estimate_tpr(s, Method::Naive, 0.05);
    CHECK(t.trials > 0);
}

TEST_CASE("method names") {
    for (Method m : all_methods()) CHECK(parse_method(to_string(m)) == m);
    CHECK(to_string(Method::Selective) == "ptl-si");
    CHECK_THROWS_AS(parse_method("magic"), ValidationError);
}

TEST_CASE("Kolmogorov-Smirnov against uniform") {
    CHECK(kolmogorov_survival(0.0) == doctest::Approx(1.0));
    // P(K > 1.36) ~= 0.0495, P(K > 1.63) ~= 0.0098
    CHECK(kolmogorov_survival(1.36) == doctest::Approx(0.0495).epsilon(0.01));
    CHECK(kolmogorov_survival(1.63) == doctest::Approx(0.0098).epsilon(0.02));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u;
    std::vector<double> uni(2000), skew(2000);
    for (auto& x : uni) x = u(rng);
    for (auto& x : skew) x = std::pow(u(rng), 1.5);
    const KsResult a = ks_uniform(uni);
    CHECK(a.n == 2000);
    CHECK(a.p_value > 0.01);
    CHECK(ks_uniform(skew).p_value < 1e-6);
    // D for {0.5} is 0.5.
    CHECK(ks_uniform({0.5}).statistic == doctest::Approx(0.5));
}

TEST_CASE("least squares line and median") {
    const LinearFit f = least_squares_line({1, 2, 3, 4}, {3, 5, 7, 9});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r_squared == doctest::Approx(1.0));
    CHECK(median({3, 1, 2}) == 2.0);
    CHECK(median({4, 1, 2, 3}) == 2.5);
}

}
