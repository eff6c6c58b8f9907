#pragma once

#include "ptlsi/data_model.hpp"
#include "ptlsi/inference.hpp"
#include "ptlsi/kkt_regions.hpp"
#include "ptlsi/pipelines.hpp"

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace ptlsi {

inline constexpr double kDefaultStepEps = 1e-6;

struct SearchOptions {
    /// Advance past each right endpoint by step_eps * sigma.
    double step_eps = kDefaultStepEps;
    /// Matching intervals closer than merge_factor * step_eps * sigma are merged.
    double merge_factor = 2.0;
    /// Keep one LineSegment (with its trace) per visited segment.
    bool keep_segments = true;
    /// Refit at every segment midpoint and require the same event.
    bool validate_midpoints = false;
    /// Query-point attempts before an inconsistent region is reported.
    int max_retries = 3;
    std::size_t max_segments = 2'000'000;
};

struct LineSegment {
    Interval interval;
    SelectionTrace trace;
    bool matches_observed = false;
};

struct SearchStats {
    std::size_t segments_visited = 0;
    std::size_t matching_segments = 0;
    std::size_t solver_calls = 0;
    double wall_seconds = 0.0;
};

struct SearchResult {
    TruncationRegion region;
    std::vector<LineSegment> segments;
    SearchStats stats;
};

/// endpoint + eps * sigma, strictly greater than endpoint.
double advance(double endpoint, double sigma, double eps = kDefaultStepEps);

/// Sweeps [line.z_min, line.z_max] left to right. At each query point the
/// pipeline is refit on Y(z), the event region Z_u ∩ Z_v ∩ Z_t is computed,
/// and the sweep jumps just past its right endpoint. The truncation region is
/// the merged union of segments whose selected set equals `observed_selected`.
SearchResult divide_and_conquer(const LineSlice& line, const TransferPipeline& pipeline,
                                const std::vector<Index>& observed_selected, const SearchOptions& opts = {});

/// Single event region containing z_obs (clipped to the window).
Interval over_conditioned_interval(const LineSlice& line, const TransferPipeline& pipeline,
                                   const SelectionTrace& observed_trace);

/// One CSV record per segment: lower, upper, |O|, |L|, |M|, match.
void write_segment_log(std::ostream& out, const std::vector<LineSegment>& segments);

} // namespace ptlsi
