#include "ptlsi/driver.hpp"

#include "ptlsi/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace ptlsi {

FeatureResult infer_feature(const TransferPipeline& pipeline, const SelectionTrace& observed, Index feature,
                            const InferenceOptions& opts) {
    FeatureResult fr;
    fr.feature_index = feature;
    try {
        const VectorXd eta =
            build_eta(pipeline.target_design(), observed.selected.indices, feature, pipeline.leading_rows());
        const LineSlice line = decompose(pipeline.observed_response(), eta, pipeline.covariance(), opts.window_sigmas);

        PValueReport& rep = fr.report;
        rep.feature_index = feature;
        const auto pos = std::find(observed.selected.indices.begin(), observed.selected.indices.end(), feature) -
                         observed.selected.indices.begin();
        rep.sign = observed.selected.signs[static_cast<std::size_t>(pos)];
        rep.z_obs = line.z_obs;
        rep.sigma = line.sigma;
        rep.p_naive = naive_p(line.z_obs, line.sigma);
        if (opts.baselines.bonferroni) {
            rep.p_bonferroni = bonferroni_p(rep.p_naive, pipeline.feature_count());
        }

        if (opts.conditioning == Conditioning::Full) {
            SearchOptions so = opts.search;
            so.keep_segments = so.keep_segments && so.validate_midpoints;
            SearchResult sr = divide_and_conquer(line, pipeline, observed.selected.indices, so);
            fr.stats = sr.stats;
            rep.region = std::move(sr.region);
        } else {
            rep.region = TruncationRegion::from_intervals({over_conditioned_interval(line, pipeline, observed)});
            fr.stats.segments_visited = 1;
            fr.stats.matching_segments = 1;
        }
        if (!rep.region.contains(line.z_obs, opts.search.step_eps * line.sigma)) {
            throw SearchError("truncation region does not contain the observed statistic");
        }
        rep.p_selective = truncated_p(line.z_obs, line.sigma, rep.region);
        fr.ok = true;
    } catch (const NumericError& e) {
        fr.ok = false;
        fr.skip_reason = e.what();
    }
    return fr;
}

namespace {

InferenceResult run(const MultiTaskData& data, const PipelineConfig& cfg, InferenceOptions opts) {
    validate(data);
    validate(cfg, data);
    InferenceResult res;
    res.config = cfg;
    res.options = opts;

    const TransferPipeline pipeline = TransferPipeline::make(data, cfg);
    const SelectionTrace observed = pipeline.fit_observed();
    res.selected = observed.selected;

    if (opts.baselines.datasplit) {
        res.datasplit = datasplit_p(data, opts.baselines.datasplit_config.value_or(cfg), opts.baselines.split_seed);
    }
    if (res.selected.empty()) {
        res.status = "no features selected; nothing to test";
        return res;
    }

    const std::size_t m = res.selected.size();
    res.features.resize(m);
    const unsigned workers = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(m)));
    if (workers == 1) {
        for (std::size_t i = 0; i < m; ++i) {
            res.features[i] = infer_feature(pipeline, observed, res.selected.indices[i], opts);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < m; i = next++) {
                    res.features[i] = infer_feature(pipeline, observed, res.selected.indices[i], opts);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    if (res.datasplit) {
        const auto& ds = *res.datasplit;
        for (auto& fr : res.features) {
            for (std::size_t k = 0; k < ds.selected.size(); ++k) {
                if (ds.selected.indices[k] == fr.feature_index && std::isfinite(ds.p_values[k])) {
                    fr.report.p_datasplit = ds.p_values[k];
                }
            }
        }
    }

    const auto failed = std::count_if(res.features.begin(), res.features.end(), [](const auto& f) { return !f.ok; });
    res.status = failed == 0 ? "ok" : std::to_string(failed) + " feature(s) skipped";
    return res;
}

} // namespace

InferenceResult run_ptlsi(const MultiTaskData& data, const PipelineConfig& cfg, InferenceOptions opts) {
    opts.conditioning = Conditioning::Full;
    return run(data, cfg, std::move(opts));
}

InferenceResult run_ptlsi_oc(const MultiTaskData& data, const PipelineConfig& cfg, InferenceOptions opts) {
    opts.conditioning = Conditioning::OverConditioned;
    return run(data, cfg, std::move(opts));
}

} // namespace ptlsi
