#include "ptlsi/driver.hpp"
#include "ptlsi/experiments.hpp"
#include "ptlsi/report_json.hpp"

#include <doctest.h>

#include <cmath>

using namespace ptlsi;

namespace {

SyntheticData null_instance(std::uint64_t seed) {
    SyntheticSpec spec = SyntheticSpec::desk();
    spec.p = 12;
    spec.n_target = 20;
    spec.n_source = 25;
    spec.seed = seed;
    return generate(spec);
}

} // namespace

TEST_SUITE("driver") {

TEST_CASE("statistics beyond the default window") {
    int extreme = 0;
    for (double gamma : {2.0, 3.0, 5.0, 8.0}) {
        SyntheticSpec spec = SyntheticSpec::desk();
        spec.p = 10;
        spec.n_target = 30;
        spec.n_source = 30;
        spec.null_target = false;
        spec.gamma = gamma;
        spec.seed = 5;
        const SyntheticData sd = generate(spec);
        const PipelineConfig cfg = default_config(PipelineKind::TransFusion, sd.data, sd.informative);
        const InferenceResult res = run_ptlsi(sd.data, cfg);
        for (const FeatureResult& f : res.features) {
            if (!f.ok) {
                CHECK_MESSAGE(f.skip_reason.find("mass") != std::string::npos, f.skip_reason);
                continue;
            }
            CHECK(f.report.region.contains(f.report.z_obs, 1e-6 * f.report.sigma));
            if (std::abs(f.report.z_obs) > 20.0 * f.report.sigma) {
                ++extreme;
                CHECK(f.report.p_selective >= 0.0);
                CHECK(f.report.p_selective <= 1.0);
                CHECK(f.report.p_naive < 1e-80);
            }
        }
    }
    CHECK(extreme > 0);
}

TEST_CASE("full and over-conditioned runs on null instances") {
    int features = 0;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        for (PipelineKind kind : {PipelineKind::TransFusion, PipelineKind::OracleTransLasso}) {
            const SyntheticData sd = null_instance(seed);
            const PipelineConfig cfg = default_config(kind, sd.data, sd.informative);
            const InferenceResult full = run_ptlsi(sd.data, cfg);
            const InferenceResult oc = run_ptlsi_oc(sd.data, cfg);
            CHECK(full.selected == oc.selected);
            REQUIRE(full.features.size() == full.selected.size());
            REQUIRE(oc.features.size() == full.selected.size());
            for (std::size_t i = 0; i < full.features.size(); ++i) {
                const FeatureResult& f = full.features[i];
                const FeatureResult& o = oc.features[i];
                CHECK(f.feature_index == full.selected.indices[i]);
                if (!f.ok || !o.ok) {
                    CHECK_FALSE((f.ok ? o.skip_reason : f.skip_reason).empty());
                    continue;
                }
                ++features;
                CHECK(f.report.region.contains(f.report.z_obs, 1e-6 * f.report.sigma));
                CHECK(o.report.region.intervals().size() == 1);
                CHECK(o.report.region.contains(o.report.z_obs, 1e-6 * o.report.sigma));
                CHECK(f.report.region.covers(o.report.region, 3e-6 * f.report.sigma));
                CHECK(f.report.region.total_width() >= o.report.region.total_width() - 3e-6 * f.report.sigma);
                for (double p : {f.report.p_selective, o.report.p_selective, f.report.p_naive}) {
                    CHECK(p >= 0.0);
                    CHECK(p <= 1.0);
                }
                REQUIRE(f.report.p_bonferroni);
                CHECK(*f.report.p_bonferroni >= f.report.p_naive);
                CHECK(f.report.sign == full.selected.signs[i]);
            }
        }
    }
    CHECK(features > 10);
}

TEST_CASE("result documents are byte-identical across runs and thread counts") {
    const SyntheticData sd = null_instance(42);
    const PipelineConfig cfg = default_config(PipelineKind::TransFusion, sd.data, sd.informative);
    InferenceOptions opts;
    opts.baselines.datasplit = true;
    opts.baselines.split_seed = 5;
    const std::string a = dump(to_json(run_ptlsi(sd.data, cfg, opts)));
    const std::string b = dump(to_json(run_ptlsi(sd.data, cfg, opts)));
    opts.threads = 3;
    const std::string c = dump(to_json(run_ptlsi(sd.data, cfg, opts)));
    CHECK(a == b);
    CHECK(a == c);
    CHECK(a.find("wall_seconds") == std::string::npos);
    CHECK(a.back() == '\n');
    const Json doc = Json::parse(a);
    CHECK(doc.contains("config"));
    CHECK(doc.contains("features"));
}

TEST_CASE("empty selection gives an empty result with a status") {
    const SyntheticData sd = null_instance(3);
    const PipelineConfig cfg = default_config(PipelineKind::TransFusion, sd.data, sd.informative, 1e4);
    const InferenceResult r = run_ptlsi(sd.data, cfg);
    CHECK(r.selected.empty());
    CHECK(r.features.empty());
    CHECK(r.status.find("no features") != std::string::npos);
}

TEST_CASE("data-splitting baseline is attached on request") {
    const SyntheticData sd = null_instance(8);
    const PipelineConfig cfg = default_config(PipelineKind::OracleTransLasso, sd.data, sd.informative);
    InferenceOptions opts;
    opts.baselines.datasplit = true;
    opts.baselines.bonferroni = false;
    const InferenceResult r = run_ptlsi(sd.data, cfg, opts);
    REQUIRE(r.datasplit);
    CHECK(r.datasplit->selection_rows.size() == 10);
    for (const auto& f : r.features) CHECK_FALSE(f.report.p_bonferroni);
}

}
