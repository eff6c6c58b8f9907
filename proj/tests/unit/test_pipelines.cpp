#include "ptlsi/errors.hpp"
#include "ptlsi/pipelines.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace ptlsi;

TEST_SUITE("pipelines") {

TEST_CASE("aggregate arithmetic on a one-feature instance") {
    // theta = (beta1 - beta0, beta0) with beta1 = 2, beta0 = 4
    VectorXd theta(2);
    theta << -2.0, 4.0;
    CHECK(transfusion_w_from_betas(theta, 1, 1, 1)[0] == doctest::Approx(3.0));
}

TEST_CASE("B / N aggregate equals the per-task average form") {
    std::mt19937_64 rng(1);
    const MultiTaskData d = oracle::small_instance(rng, 8, 3, 12, 10, 1.0);
    const auto tp = TransferPipeline::transfusion(d, TransFusionConfig::defaults(d));
    std::normal_distribution<double> n01;
    for (int rep = 0; rep < 10; ++rep) {
        VectorXd theta(32);
        for (Index i = 0; i < 32; ++i) theta[i] = n01(rng);
        const VectorXd a = tp.aggregate(theta);
        const VectorXd b = transfusion_w_from_betas(theta, 3, 12, 10);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("huge lambdas select nothing") {
    std::mt19937_64 rng(2);
    const MultiTaskData d = oracle::small_instance(rng, 6, 2, 10, 8, 1.0);
    TransFusionConfig tf = TransFusionConfig::defaults(d);
    tf.lambda0 = tf.lambda_tilde = 1e6;
    const SelectionTrace t = transfusion_fit(d, tf);
    CHECK(t.theta.isZero(0.0));
    CHECK(t.delta.isZero(0.0));
    CHECK(t.selected.empty());
    OracleTransLassoConfig otl = OracleTransLassoConfig::defaults(d, {0});
    otl.lambda_w = otl.lambda_delta = 1e6;
    CHECK(oracle_translasso_fit(d, otl).selected.empty());
}

TEST_CASE("TransFusion equals two independent solver calls") {
    std::mt19937_64 rng(3);
    const MultiTaskData d = oracle::small_instance(rng, 8, 2, 12, 10, 1.0);
    const TransFusionConfig cfg = TransFusionConfig::defaults(d);
    const SelectionTrace t = transfusion_fit(d, cfg);

    const StackedProblem st = build_stacked(d, cfg.source_weights);
    const L1Solution s1 = solve({st.design, st.response, double(st.total_rows()), cfg.lambda0, st.penalty_weights});
    const VectorXd w = transfusion_w_from_betas(s1.coefficients, 2, 12, 10);
    const L1Solution s2 =
        solve({d.target.design, d.target.response - d.target.design * w, 10.0, cfg.lambda_tilde, VectorXd::Ones(8)});
    CHECK((t.beta - (w + s2.coefficients)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(t.co_active == s1.active);
    CHECK(t.debias_active == s2.active);
    CHECK(t.selected == SignedSet::from_vector(t.beta));
}

TEST_CASE("Oracle Trans-Lasso equals a direct stacked solve") {
    std::mt19937_64 rng(4);
    const MultiTaskData d = oracle::small_instance(rng, 8, 3, 12, 10, 1.0);
    const OracleTransLassoConfig cfg = OracleTransLassoConfig::defaults(d, {0, 2});
    const SelectionTrace t = oracle_translasso_fit(d, cfg);

    MatrixXd xi(24, 8);
    VectorXd yi(24);
    xi << d.sources[0].design, d.sources[2].design;
    yi << d.sources[0].response, d.sources[2].response;
    const L1Solution s1 = solve({xi, yi, 24.0, cfg.lambda_w, VectorXd::Ones(8)});
    CHECK((t.w - s1.coefficients).cwiseAbs().maxCoeff() < 1e-8);
    const L1Solution s2 = solve(
        {d.target.design, d.target.response - d.target.design * s1.coefficients, 10.0, cfg.lambda_delta, VectorXd::Ones(8)});
    CHECK((t.beta - (s1.coefficients + s2.coefficients)).cwiseAbs().maxCoeff() < 1e-8);

    const auto tp = TransferPipeline::oracle_trans_lasso(d, cfg);
    CHECK(tp.observed_response().head(24) == yi);
    CHECK(tp.observed_response().tail(10) == d.target.response);
}

TEST_CASE("stacking every source concatenates the designs") {
    std::mt19937_64 rng(5);
    const MultiTaskData d = oracle::small_instance(rng, 5, 3, 4, 6, 1.0);
    const InformativeStack s = stack_informative(d, {0, 1, 2});
    MatrixXd expected(12, 5);
    expected << d.sources[0].design, d.sources[1].design, d.sources[2].design;
    CHECK(s.design == expected);
}

TEST_CASE("killed co-training reduces to a plain target lasso") {
    std::mt19937_64 rng(6);
    MultiTaskData d = oracle::small_instance(rng, 7, 2, 15, 12, 0.0);
    TransFusionConfig cfg = TransFusionConfig::defaults(d);
    const StackedProblem st = build_stacked(d, cfg.source_weights);
    cfg.lambda0 = WeightedLassoSolver(st.design, double(st.total_rows()), 1.0, st.penalty_weights).lambda_max(st.response);
    const SelectionTrace t = transfusion_fit(d, cfg);
    const L1Solution plain = solve({d.target.design, d.target.response, 12.0, cfg.lambda_tilde, VectorXd::Ones(7)});
    CHECK(t.w.isZero(0.0));
    CHECK((t.beta - plain.coefficients).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("stage solves satisfy KKT") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        const MultiTaskData d = oracle::small_instance(rng, 10, 2, 15, 12, 0.8);
        const auto tp = TransferPipeline::transfusion(d, TransFusionConfig::defaults(d));
        const SelectionTrace t = tp.fit_observed();
        CHECK(tp.stage1().kkt_residual(tp.observed_response(), t.theta) <= 1e-8);
        const VectorXd y2 = d.target.response - d.target.design * t.w;
        CHECK(tp.stage2().kkt_residual(y2, t.delta) <= 1e-8);
    }
}

TEST_CASE("select examples") {
    SelectionTrace t;
    t.beta = (VectorXd(4) << 0, 0.3, 0, -1.2).finished();
    SignedSet m = select(t);
    CHECK(m.indices == std::vector<Index>{1, 3});
    CHECK(m.signs == std::vector<int>{1, -1});
    t.beta = VectorXd::Zero(4);
    CHECK(select(t).empty());
    t.beta = (VectorXd(2) << 5e-11, 1).finished();
    CHECK(select(t).indices == std::vector<Index>{1});
}

TEST_CASE("default lambdas and validation") {
    std::mt19937_64 rng(8);
    const MultiTaskData d = oracle::small_instance(rng, 50, 3, 40, 30, 1.0);
    const auto tf = TransFusionConfig::defaults(d);
    CHECK(tf.lambda0 == doctest::Approx(std::sqrt(std::log(50.0) / 150.0)));
    CHECK(tf.lambda_tilde == doctest::Approx(std::sqrt(std::log(50.0) / 30.0)));
    const auto otl = OracleTransLassoConfig::defaults(d, {0, 1});
    CHECK(otl.lambda_w == doctest::Approx(std::sqrt(std::log(50.0) / 80.0)));
    CHECK_THROWS_AS(validate(PipelineConfig{OracleTransLassoConfig{1, 1, {}}}, d), ValidationError);
    CHECK_THROWS_AS(validate(PipelineConfig{OracleTransLassoConfig{1, 1, {3}}}, d), ValidationError);
    CHECK_THROWS_AS(validate(PipelineConfig{OracleTransLassoConfig{1, 1, {0, 0}}}, d), ValidationError);
    CHECK_THROWS_AS(validate(PipelineConfig{TransFusionConfig{0.0, 1, {1, 1, 1}}}, d), ValidationError);
    CHECK_THROWS_AS(validate(PipelineConfig{TransFusionConfig{1, 1, {1, 1}}}, d), ValidationError);
}

}
