#include "ptlsi/errors.hpp"
#include "ptlsi/parametric_search.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace ptlsi;

namespace {

struct Case {
    MultiTaskData data;
    TransferPipeline pipeline;
    SelectionTrace trace;
    LineSlice line;
};

std::optional<Case> make_case(std::mt19937_64& rng, PipelineKind kind, Index p, double window = 8.0) {
    MultiTaskData d = oracle::small_instance(rng, p, 2, 12, 10, 1.0);
    PipelineConfig cfg;
    if (kind == PipelineKind::TransFusion)
        cfg = TransFusionConfig::defaults(d, 0.6);
    else
        cfg = OracleTransLassoConfig::defaults(d, {0, 1}, 0.6);
    TransferPipeline tp = TransferPipeline::make(d, cfg);
    SelectionTrace tr = tp.fit_observed();
    if (tr.selected.empty()) return std::nullopt;
    try {
        const VectorXd eta = build_eta(tp.target_design(), tr.selected.indices, tr.selected.indices.front(),
                                       tp.leading_rows());
        LineSlice line = decompose(tp.observed_response(), eta, tp.covariance(), window);
        return Case{std::move(d), std::move(tp), std::move(tr), std::move(line)};
    } catch (const NumericError&) {
        return std::nullopt;
    }
}

} // namespace

TEST_SUITE("parametric_search") {

TEST_CASE("advance") {
    CHECK(advance(1.0, 1.0) == doctest::Approx(1.000001).epsilon(1e-15));
    CHECK(advance(0.0, 2.0) == doctest::Approx(2e-6).epsilon(1e-15));
    CHECK(advance(1.0, 1.0, 1e-3) == doctest::Approx(1.001));
    double z = -3.0;
    for (int i = 0; i < 100; ++i) {
        const double next = advance(z, 0.5);
        CHECK(next > z);
        z = next;
    }
    CHECK(advance(1e17, 1.0) > 1e17);
}

TEST_CASE("constant solution gives one segment covering the window") {
    std::mt19937_64 rng(1);
    MultiTaskData d = oracle::small_instance(rng, 4, 1, 8, 8, 0.0);
    const TransferPipeline tp = TransferPipeline::make(d, TransFusionConfig::defaults(d, 1e4));
    VectorXd eta = VectorXd::Zero(tp.response_size());
    eta.tail(8).setConstant(0.25);
    const LineSlice line = decompose(tp.observed_response(), eta, tp.covariance());
    const SearchResult sr = divide_and_conquer(line, tp, {});
    CHECK(sr.stats.segments_visited == 1);
    REQUIRE(sr.region.intervals().size() == 1);
    CHECK(sr.region.intervals()[0].lower == doctest::Approx(line.z_min));
    CHECK(sr.region.intervals()[0].upper == doctest::Approx(line.z_max));
}

TEST_CASE("sweep agrees with a dense grid of refits") {
    for (PipelineKind kind : {PipelineKind::TransFusion, PipelineKind::OracleTransLasso}) {
        CAPTURE(to_string(kind));
        std::mt19937_64 rng(kind == PipelineKind::TransFusion ? 2024 : 2025);
        int instances = 0;
        for (int rep = 0; rep < 80 && instances < 12; ++rep) {
            auto c = make_case(rng, kind, 5, 6.0);
            if (!c) continue;
            ++instances;
            const SearchResult sr = divide_and_conquer(c->line, c->pipeline, c->trace.selected.indices);
            CHECK(sr.region.contains(c->line.z_obs, 1e-6 * c->line.sigma));
            const oracle::GridComparison g =
                oracle::grid_scan(c->line, c->pipeline, c->trace.selected.indices, sr.region);
            CAPTURE(g.first_disagreement);
            CHECK(g.disagreements == 0);
            CHECK(g.points > 10000);
        }
        CHECK(instances >= 8);
    }
}

TEST_CASE("segments tile the window, are deterministic, and refit consistently") {
    std::mt19937_64 rng(55);
    int instances = 0;
    for (int rep = 0; rep < 40 && instances < 6; ++rep) {
        auto c = make_case(rng, PipelineKind::TransFusion, 6);
        if (!c) continue;
        ++instances;
        SearchOptions opts;
        opts.validate_midpoints = true;
        const SearchResult a = divide_and_conquer(c->line, c->pipeline, c->trace.selected.indices, opts);
        const SearchResult b = divide_and_conquer(c->line, c->pipeline, c->trace.selected.indices, opts);
        REQUIRE(!a.segments.empty());
        CHECK(a.stats.matching_segments <= a.stats.segments_visited);
        CHECK(a.stats.segments_visited == a.segments.size());
        const double eps = opts.step_eps * c->line.sigma;
        double width = 0.0;
        CHECK(a.segments.front().interval.lower == doctest::Approx(c->line.z_min));
        CHECK(a.segments.back().interval.upper == doctest::Approx(c->line.z_max));
        for (std::size_t i = 0; i < a.segments.size(); ++i) {
            const auto& s = a.segments[i];
            CHECK(s.interval.upper >= s.interval.lower);
            width += s.interval.width();
            if (i > 0) {
                const double gap = s.interval.lower - a.segments[i - 1].interval.upper;
                CHECK(gap >= 0.0);
                CHECK(gap <= eps * 1.0000001);
            }
            CHECK(s.matches_observed == (s.trace.selected.indices == c->trace.selected.indices));
        }
        CHECK(std::abs(width - (c->line.z_max - c->line.z_min)) <= a.segments.size() * eps * 1.0000001);
        REQUIRE(a.segments.size() == b.segments.size());
        for (std::size_t i = 0; i < a.segments.size(); ++i) {
            CHECK(a.segments[i].interval == b.segments[i].interval);
            CHECK(a.segments[i].trace.selected == b.segments[i].trace.selected);
        }
        CHECK(a.region.intervals() == b.region.intervals());
        CHECK(a.region.total_width() > 0.0);
    }
    CHECK(instances >= 4);
}

TEST_CASE("over-conditioned interval sits inside the full region") {
    std::mt19937_64 rng(808);
    int instances = 0;
    for (int rep = 0; rep < 60 && instances < 10; ++rep) {
        auto c = make_case(rng, rep % 2 ? PipelineKind::TransFusion : PipelineKind::OracleTransLasso, 6);
        if (!c) continue;
        ++instances;
        const SearchResult sr = divide_and_conquer(c->line, c->pipeline, c->trace.selected.indices);
        const Interval oc = over_conditioned_interval(c->line, c->pipeline, c->trace);
        CHECK(oc.contains(c->line.z_obs));
        CHECK(sr.region.covers(TruncationRegion::from_intervals({oc}), 3e-6 * c->line.sigma));
        CHECK(oc.lower >= c->line.z_min);
        CHECK(oc.upper <= c->line.z_max);
    }
    CHECK(instances >= 6);
}

TEST_CASE("segment log") {
    std::mt19937_64 rng(9);
    std::optional<Case> c;
    while (!c) c = make_case(rng, PipelineKind::TransFusion, 4);
    const SearchResult sr = divide_and_conquer(c->line, c->pipeline, c->trace.selected.indices);
    std::ostringstream os;
    write_segment_log(os, sr.segments);
    const std::string s = os.str();
    CHECK(s.rfind("lower,upper,co_active,debias_active,selected,match\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')) == sr.segments.size() + 1);
}

}
