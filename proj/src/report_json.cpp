#include "ptlsi/report_json.hpp"

#include <Eigen/Core>

#include <cmath>

namespace ptlsi {

namespace {

// JSON has no infinities; unbounded endpoints are written as null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json signed_set(const SignedSet& s) {
    Json a = Json::array();
    for (std::size_t i = 0; i < s.size(); ++i) a.push_back({{"feature", s.indices[i]}, {"sign", s.signs[i]}});
    return a;
}

} // namespace

Json to_json(const PipelineConfig& cfg) {
    return std::visit(
        [](const auto& c) -> Json {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, TransFusionConfig>) {
                return {{"pipeline", to_string(PipelineKind::TransFusion)},
                        {"lambda0", c.lambda0},
                        {"lambda_tilde", c.lambda_tilde},
                        {"source_weights", c.source_weights}};
            } else {
                return {{"pipeline", to_string(PipelineKind::OracleTransLasso)},
                        {"lambda_w", c.lambda_w},
                        {"lambda_delta", c.lambda_delta},
                        {"informative", c.informative}};
            }
        },
        cfg);
}

Json to_json(const InferenceOptions& o) {
    Json j{{"conditioning", o.conditioning == Conditioning::Full ? "full" : "over-conditioned"},
           {"window_sigmas", o.window_sigmas},
           {"step_eps", o.search.step_eps},
           {"merge_factor", o.search.merge_factor},
           {"bonferroni", o.baselines.bonferroni},
           {"datasplit", o.baselines.datasplit},
           {"split_seed", o.baselines.split_seed}};
    if (o.baselines.datasplit_config) j["datasplit_config"] = to_json(*o.baselines.datasplit_config);
    return j;
}

Json to_json(const TruncationRegion& region) {
    Json a = Json::array();
    for (const auto& iv : region.intervals()) a.push_back(Json::array({number(iv.lower), number(iv.upper)}));
    return a;
}

Json to_json(const SyntheticSpec& s) {
    return {{"p", s.p},
            {"n_target", s.n_target},
            {"n_source", s.n_source},
            {"informative", s.informative},
            {"uninformative", s.uninformative},
            {"gamma", s.gamma},
            {"upsilon", s.upsilon},
            {"null_target", s.null_target},
            {"noise", to_string(s.noise)},
            {"seed", s.seed}};
}

Json to_json(const InferenceResult& r, bool include_timing) {
    Json doc;
    doc["status"] = r.status;
    doc["config"] = to_json(r.config);
    doc["options"] = to_json(r.options);
    doc["selected"] = signed_set(r.selected);
    Json feats = Json::array();
    for (const auto& f : r.features) {
        Json j{{"feature", f.feature_index}, {"ok", f.ok}};
        if (!f.ok) {
            j["skip_reason"] = f.skip_reason;
        } else {
            const auto& rep = f.report;
            j["sign"] = rep.sign;
            j["z_obs"] = rep.z_obs;
            j["sigma"] = rep.sigma;
            j["p_selective"] = rep.p_selective;
            j["p_naive"] = rep.p_naive;
            j["p_bonferroni"] = rep.p_bonferroni ? Json(*rep.p_bonferroni) : Json(nullptr);
            j["p_datasplit"] = rep.p_datasplit ? Json(*rep.p_datasplit) : Json(nullptr);
            j["region"] = to_json(rep.region);
        }
        Json stats{{"segments_visited", f.stats.segments_visited},
                   {"matching_segments", f.stats.matching_segments},
                   {"solver_calls", f.stats.solver_calls}};
        if (include_timing) stats["wall_seconds"] = f.stats.wall_seconds;
        j["stats"] = stats;
        feats.push_back(std::move(j));
    }
    doc["features"] = std::move(feats);
    if (r.datasplit) {
        const auto& ds = *r.datasplit;
        Json d{{"selection_rows", ds.selection_rows}, {"inference_rows", ds.inference_rows},
               {"selected", signed_set(ds.selected)}};
        Json ps = Json::array();
        for (std::size_t k = 0; k < ds.p_values.size(); ++k) {
            ps.push_back({{"feature", ds.selected.indices[k]},
                          {"p", number(ds.p_values[k])},
                          {"failure", ds.failures[k]}});
        }
        d["p_values"] = std::move(ps);
        doc["datasplit"] = std::move(d);
    }
    return doc;
}

Json run_manifest(const std::string& command, const std::vector<std::string>& argv, const Json& config) {
    return {{"tool", "ptlsi"},
            {"version", kVersion},
            {"command", command},
            {"argv", argv},
            {"config", config},
            {"build",
             {{"compiler", __VERSION__},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}}};
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

} // namespace ptlsi
