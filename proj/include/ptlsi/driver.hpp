#pragma once

#include "ptlsi/inference.hpp"
#include "ptlsi/parametric_search.hpp"
#include "ptlsi/pipelines.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ptlsi {

enum class Conditioning { Full, OverConditioned };

struct BaselineFlags {
    bool bonferroni = true;
    bool datasplit = false;
    std::uint64_t split_seed = 0;
    /// Pipeline configuration for the data-splitting run (defaults to the
    /// main configuration when unset).
    std::optional<PipelineConfig> datasplit_config;
};

struct InferenceOptions {
    Conditioning conditioning = Conditioning::Full;
    double window_sigmas = kDefaultWindowSigmas;
    SearchOptions search;
    BaselineFlags baselines;
    /// Worker threads for per-feature sweeps (1 = sequential).
    unsigned threads = 1;
};

struct FeatureResult {
    Index feature_index = 0;
    bool ok = false;
    std::string skip_reason;
    PValueReport report;
    SearchStats stats;
};

struct InferenceResult {
    PipelineConfig config;
    InferenceOptions options;
    SignedSet selected;
    std::vector<FeatureResult> features; // ordered like selected.indices
    std::string status;
    std::optional<DataSplitResult> datasplit;
};

/// Fit, select, and compute one selective p-value per selected feature.
InferenceResult run_ptlsi(const MultiTaskData& data, const PipelineConfig& cfg, InferenceOptions opts = {});

/// Same, conditioning only on the event region that contains z_obs.
InferenceResult run_ptlsi_oc(const MultiTaskData& data, const PipelineConfig& cfg, InferenceOptions opts = {});

/// Per-feature inference on an already-fitted pipeline.
FeatureResult infer_feature(const TransferPipeline& pipeline, const SelectionTrace& observed, Index feature,
                            const InferenceOptions& opts);

} // namespace ptlsi
