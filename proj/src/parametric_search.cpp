#include "ptlsi/parametric_search.hpp"

#include "ptlsi/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

namespace ptlsi {

double advance(double endpoint, double sigma, double eps) {
    if (!std::isfinite(endpoint)) {
        throw ValidationError("advance: endpoint must be finite");
    }
    const double next = endpoint + eps * sigma;
    return next > endpoint ? next : std::nextafter(endpoint, kInf);
}

namespace {

struct Located {
    SelectionTrace trace;
    Interval interval;
    double z = 0.0;
    AffinePath path;
};

// Fits at z and returns the event interval, nudging z forward when the
// solver's active set and the KKT region disagree at the query point.
Located locate(const LineSlice& line, const TransferPipeline& pipeline, double z, const SelectionTrace* warm,
               const SearchOptions& opts, std::size_t& calls) {
    const double slack = 0.5 * opts.step_eps * line.sigma;
    std::string last_problem;
    for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
        SelectionTrace tr = pipeline.fit(line.at(z), attempt == 0 ? warm : nullptr);
        ++calls;
        const EventRegion ev = refine_event(line, pipeline, tr, z, slack);
        if (ev.combined && ev.combined->contains(z, slack)) {
            return Located{std::move(tr), *ev.combined, z, ev.path};
        }
        std::ostringstream msg;
        msg << "event region at z=" << z << " ";
        if (ev.combined) {
            msg << "is [" << ev.combined->lower << ", " << ev.combined->upper << "]";
        } else {
            msg << "is infeasible (u:" << bool(ev.u.interval) << " v:" << bool(ev.v.interval)
                << " t:" << bool(ev.t) << ")";
        }
        last_problem = msg.str();
        z = advance(z, line.sigma, opts.step_eps);
    }
    throw SearchError("KKT region and solver disagree: " + last_problem);
}

} // namespace

SearchResult divide_and_conquer(const LineSlice& line, const TransferPipeline& pipeline,
                                const std::vector<Index>& observed_selected, const SearchOptions& opts) {
    if (!(line.sigma > 0.0) || !(line.z_min < line.z_max)) {
        throw ValidationError("divide_and_conquer: invalid line window");
    }
    const auto start = std::chrono::steady_clock::now();
    SearchResult res;
    std::vector<Interval> matching;

    double z = line.z_min;
    double prev_right = line.z_min;
    SelectionTrace prev;
    bool have_prev = false;
    while (true) {
        if (res.stats.segments_visited >= opts.max_segments) {
            throw SearchError("divide_and_conquer: segment budget exhausted");
        }
        Located loc = locate(line, pipeline, z, have_prev ? &prev : nullptr, opts, res.stats.solver_calls);
        const double lower = std::max(prev_right, std::min(loc.interval.lower, loc.z));
        const double upper = std::max(loc.z, std::min(loc.interval.upper, line.z_max));
        const Interval seg{lower, upper};
        const bool match = loc.trace.selected.indices == observed_selected;

        if (opts.validate_midpoints && seg.width() > 0.0) {
            const SelectionTrace mid = pipeline.fit(line.at(0.5 * (seg.lower + seg.upper)), &loc.trace);
            ++res.stats.solver_calls;
            if (!mid.same_event(loc.trace)) {
                std::ostringstream msg;
                msg << "segment [" << seg.lower << ", " << seg.upper << "] midpoint refit changes the event";
                throw SearchError(msg.str());
            }
        }

        ++res.stats.segments_visited;
        if (match) {
            ++res.stats.matching_segments;
            matching.push_back(seg);
        }
        if (opts.keep_segments) {
            res.segments.push_back(LineSegment{seg, loc.trace, match});
        }
        if (upper >= line.z_max) {
            break;
        }
        prev_right = upper;
        z = advance(upper, line.sigma, opts.step_eps);
        // Warm start: the segment's exact solution continued to the next query point.
        prev = std::move(loc.trace);
        prev.theta = loc.path.theta_offset + loc.path.theta_slope * z;
        prev.delta = loc.path.delta_offset + loc.path.delta_slope * z;
        have_prev = true;
    }
    res.region = TruncationRegion::from_intervals(std::move(matching), opts.merge_factor * opts.step_eps * line.sigma);
    res.stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

Interval over_conditioned_interval(const LineSlice& line, const TransferPipeline& pipeline,
                                   const SelectionTrace& observed_trace) {
    const double slack = 1e-9 * line.sigma;
    SelectionTrace tr = observed_trace;
    const EventRegion ev = refine_event(line, pipeline, tr, line.z_obs, slack);
    if (!ev.combined || !ev.combined->contains(line.z_obs, slack)) {
        throw SearchError("observed event region does not contain z_obs");
    }
    Interval iv{std::max(ev.combined->lower, line.z_min), std::min(ev.combined->upper, line.z_max)};
    iv.lower = std::min(iv.lower, line.z_obs);
    iv.upper = std::max(iv.upper, line.z_obs);
    return iv;
}

void write_segment_log(std::ostream& out, const std::vector<LineSegment>& segments) {
    out << "lower,upper,co_active,debias_active,selected,match\n";
    for (const auto& s : segments) {
        out << s.interval.lower << ',' << s.interval.upper << ',' << s.trace.co_active.size() << ','
            << s.trace.debias_active.size() << ',' << s.trace.selected.size() << ',' << (s.matches_observed ? 1 : 0)
            << '\n';
    }
}

} // namespace ptlsi
