#include "ptlsi/inference.hpp"

#include "ptlsi/errors.hpp"
#include "ptlsi/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace ptlsi {

namespace {

constexpr double kMinRegionMass = 1e-300;

double log_sum_exp(const std::vector<double>& v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) {
        return m;
    }
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

} // namespace

LineSlice decompose(const VectorXd& y_obs, const VectorXd& eta, const MatrixXd& covariance, double window_sigmas) {
    if (y_obs.size() != eta.size() || covariance.rows() != eta.size() || covariance.cols() != eta.size()) {
        throw ValidationError("decompose: dimension mismatch");
    }
    const VectorXd sigma_eta = covariance * eta;
    const double var = eta.dot(sigma_eta);
    if (!(var > 0.0) || !std::isfinite(var)) {
        throw DegenerateVarianceError("decompose: eta^T Sigma eta must be positive");
    }
    LineSlice line;
    line.b = sigma_eta / var;
    line.z_obs = eta.dot(y_obs);
    line.a = y_obs - line.b * line.z_obs;
    line.sigma = std::sqrt(var);
    const double half = window_sigmas * line.sigma;
    line.z_min = line.z_obs < -half ? line.z_obs - half : -half;
    line.z_max = line.z_obs > half ? line.z_obs + half : half;
    return line;
}

double truncated_p(double z_obs, double sigma, const TruncationRegion& region) {
    if (!(sigma > 0.0)) {
        throw DegenerateVarianceError("truncated_p: sigma must be positive");
    }
    if (region.empty()) {
        throw RegionMassError("truncated_p: empty truncation region");
    }
    const double t = std::abs(z_obs) / sigma;
    std::vector<double> den;
    std::vector<double> num;
    for (const auto& iv : region.intervals()) {
        const double l = iv.lower / sigma;
        const double u = iv.upper / sigma;
        den.push_back(normal::log_interval_mass(l, u));
        // Part of [l, u] with |x| >= t.
        if (u >= t) num.push_back(normal::log_interval_mass(std::max(l, t), u));
        if (l <= -t) num.push_back(normal::log_interval_mass(l, std::min(u, -t)));
    }
    const double log_den = log_sum_exp(den);
    if (!(log_den >= std::log(kMinRegionMass))) {
        throw RegionMassError("truncated_p: truncation region has probability mass below 1e-300");
    }
    if (t == 0.0) {
        return 1.0;
    }
    const double log_num = log_sum_exp(num);
    const double p = std::exp(log_num - log_den);
    return std::clamp(p, 0.0, 1.0);
}

double naive_p(double z_obs, double sigma) {
    if (!(sigma > 0.0)) {
        throw DegenerateVarianceError("naive_p: sigma must be positive");
    }
    return std::min(1.0, 2.0 * normal::ccdf(std::abs(z_obs) / sigma));
}

double bonferroni_p(double p_naive, Index feature_count) {
    if (!(p_naive >= 0.0 && p_naive <= 1.0)) {
        throw ValidationError("bonferroni_p: p-value outside [0, 1]");
    }
    if (p_naive == 0.0) {
        return 0.0;
    }
    const double log_p = static_cast<double>(feature_count) * std::log(2.0) + std::log(p_naive);
    return log_p >= 0.0 ? 1.0 : std::exp(log_p);
}

std::pair<std::vector<Index>, std::vector<Index>> split_rows(Index n_rows, std::uint64_t split_seed) {
    std::vector<Index> perm(static_cast<std::size_t>(n_rows));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::mt19937_64 rng(split_seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto half = perm.begin() + n_rows / 2;
    std::vector<Index> first(perm.begin(), half);
    std::vector<Index> second(half, perm.end());
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    return {first, second};
}

TaskData subset_rows(const TaskData& task, const std::vector<Index>& rows) {
    const Index m = static_cast<Index>(rows.size());
    TaskData out;
    out.design.resize(m, task.cols());
    out.response.resize(m);
    out.covariance.resize(m, m);
    for (Index i = 0; i < m; ++i) {
        out.design.row(i) = task.design.row(rows[static_cast<std::size_t>(i)]);
        out.response[i] = task.response[rows[static_cast<std::size_t>(i)]];
        for (Index j = 0; j < m; ++j) {
            out.covariance(i, j) = task.covariance(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
        }
    }
    return out;
}

DataSplitResult datasplit_p(const MultiTaskData& data, const PipelineConfig& cfg, std::uint64_t split_seed) {
    validate(data);
    if (data.target_rows() < 4) {
        throw ValidationError("data splitting needs at least 4 target rows");
    }
    DataSplitResult out;
    std::tie(out.selection_rows, out.inference_rows) = split_rows(data.target_rows(), split_seed);

    MultiTaskData first = data;
    first.target = subset_rows(data.target, out.selection_rows);
    const SelectionTrace trace = TransferPipeline::make(first, cfg).fit_observed();
    out.selected = trace.selected;
    if (out.selected.empty()) {
        return out;
    }

    const TaskData second = subset_rows(data.target, out.inference_rows);
    for (Index j : out.selected.indices) {
        try {
            const VectorXd eta = build_eta(second.design, out.selected.indices, j, 0);
            const Hypothesis h = make_hypothesis(eta, j, second.covariance, second.response);
            out.p_values.push_back(naive_p(h.observed_statistic, std::sqrt(h.sigma2)));
            out.failures.emplace_back();
        } catch (const NumericError& e) {
            out.p_values.push_back(std::numeric_limits<double>::quiet_NaN());
            out.failures.emplace_back(e.what());
        }
    }
    return out;
}

} // namespace ptlsi
