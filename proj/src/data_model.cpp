#include "ptlsi/data_model.hpp"

#include "ptlsi/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ptlsi {

namespace {

std::string label(std::string_view name) { return "task '" + std::string(name) + "'"; }

} // namespace

TaskData TaskData::with_isotropic_noise(MatrixXd design, VectorXd response, double sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        throw ValidationError("noise variance must be positive and finite");
    }
    const Index n = design.rows();
    return TaskData{std::move(design), std::move(response), sigma2 * MatrixXd::Identity(n, n)};
}

void validate_task(const TaskData& task, std::string_view name) {
    if (task.response.size() != task.design.rows()) {
        throw ValidationError(label(name) + ": response length " + std::to_string(task.response.size()) +
                              " does not match design rows " + std::to_string(task.design.rows()));
    }
    if (task.covariance.rows() != task.design.rows() || task.covariance.cols() != task.design.rows()) {
        throw ValidationError(label(name) + ": covariance must be " + std::to_string(task.design.rows()) + " x " +
                              std::to_string(task.design.rows()));
    }
    if (!task.design.allFinite() || !task.response.allFinite() || !task.covariance.allFinite()) {
        throw ValidationError(label(name) + ": non-finite entries");
    }
    if (task.design.rows() > 0) {
        const double scale = std::max(1.0, task.covariance.cwiseAbs().maxCoeff());
        if ((task.covariance - task.covariance.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
            throw ValidationError(label(name) + ": covariance is not symmetric");
        }
        Eigen::LLT<MatrixXd> llt(task.covariance);
        if (llt.info() != Eigen::Success) {
            throw ValidationError(label(name) + ": covariance is not positive definite");
        }
    }
}

void validate(const MultiTaskData& data) {
    if (data.sources.empty()) {
        throw ValidationError("at least one source task is required");
    }
    if (data.target.rows() < 1) {
        throw ValidationError("target task has no rows");
    }
    validate_task(data.target, "target");
    const Index p = data.feature_count();
    if (p < 1) {
        throw ValidationError("target design has no columns");
    }
    const Index n_s = data.sources.front().rows();
    for (std::size_t k = 0; k < data.sources.size(); ++k) {
        const auto name = "source " + std::to_string(k + 1);
        validate_task(data.sources[k], name);
        if (data.sources[k].cols() != p) {
            throw ValidationError(label(name) + ": has " + std::to_string(data.sources[k].cols()) +
                                  " columns, expected " + std::to_string(p));
        }
        if (data.sources[k].rows() != n_s) {
            throw ValidationError(label(name) + ": has " + std::to_string(data.sources[k].rows()) +
                                  " rows, all sources must have " + std::to_string(n_s));
        }
        if (n_s < 1) {
            throw ValidationError(label(name) + ": has no rows");
        }
    }
}

StackedProblem build_stacked(const MultiTaskData& data, std::span<const double> source_weights) {
    validate(data);
    const Index k_src = data.source_count();
    if (static_cast<Index>(source_weights.size()) != k_src) {
        throw ValidationError("expected " + std::to_string(k_src) + " source weights, got " +
                              std::to_string(source_weights.size()));
    }
    for (double a : source_weights) {
        if (!(a > 0.0) || !std::isfinite(a)) {
            throw ValidationError("source weights must be positive and finite");
        }
    }
    const Index p = data.feature_count();
    const Index n_s = data.source_rows();
    const Index n_t = data.target_rows();
    const Index n = k_src * n_s + n_t;

    StackedProblem out;
    out.source_count = k_src;
    out.feature_count = p;
    out.source_rows = n_s;
    out.target_rows = n_t;
    out.design = MatrixXd::Zero(n, (k_src + 1) * p);
    for (Index k = 0; k < k_src; ++k) {
        const auto& x = data.sources[static_cast<std::size_t>(k)].design;
        out.design.block(k * n_s, k * p, n_s, p) = x;
        out.design.block(k * n_s, k_src * p, n_s, p) = x;
    }
    out.design.block(k_src * n_s, k_src * p, n_t, p) = data.target.design;
    out.response = stacked_response(data);
    out.covariance = stacked_covariance(data);
    out.penalty_weights.resize((k_src + 1) * p);
    for (Index k = 0; k < k_src; ++k) {
        out.penalty_weights.segment(k * p, p).setConstant(source_weights[static_cast<std::size_t>(k)]);
    }
    out.penalty_weights.segment(k_src * p, p).setOnes();
    return out;
}

MatrixXd stacked_covariance(const MultiTaskData& data) {
    const Index n_s = data.source_rows();
    const Index k_src = data.source_count();
    const Index n = data.total_rows();
    MatrixXd cov = MatrixXd::Zero(n, n);
    for (Index k = 0; k < k_src; ++k) {
        cov.block(k * n_s, k * n_s, n_s, n_s) = data.sources[static_cast<std::size_t>(k)].covariance;
    }
    cov.bottomRightCorner(data.target_rows(), data.target_rows()) = data.target.covariance;
    return cov;
}

VectorXd stacked_response(const MultiTaskData& data) {
    const Index n_s = data.source_rows();
    VectorXd y(data.total_rows());
    for (Index k = 0; k < data.source_count(); ++k) {
        y.segment(k * n_s, n_s) = data.sources[static_cast<std::size_t>(k)].response;
    }
    y.tail(data.target_rows()) = data.target.response;
    return y;
}

bool SignedSet::contains(Index i) const { return std::binary_search(indices.begin(), indices.end(), i); }

SignedSet SignedSet::from_vector(const VectorXd& v, double threshold) {
    SignedSet s;
    for (Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > threshold) {
            s.indices.push_back(i);
            s.signs.push_back(v[i] > 0.0 ? 1 : -1);
        }
    }
    return s;
}

bool SelectionTrace::same_event(const SelectionTrace& other) const {
    return co_active == other.co_active && debias_active == other.debias_active && selected == other.selected;
}

SignedSet select(const SelectionTrace& trace) { return SignedSet::from_vector(trace.beta); }

VectorXd build_eta(const MatrixXd& target_design, std::span<const Index> selected, Index feature,
                   Index leading_rows) {
    const auto it = std::find(selected.begin(), selected.end(), feature);
    if (it == selected.end()) {
        throw ValidationError("feature " + std::to_string(feature) + " is not in the selected set");
    }
    const Index pos = static_cast<Index>(it - selected.begin());
    const MatrixXd xm = detail::select_columns(target_design, selected);
    const auto llt = detail::factor_gram(xm.transpose() * xm);
    if (!llt) {
        throw SingularSelectionError("selected target design is rank deficient; inference for this set is undefined");
    }
    VectorXd e = VectorXd::Zero(xm.cols());
    e[pos] = 1.0;
    VectorXd eta = VectorXd::Zero(leading_rows + target_design.rows());
    eta.tail(target_design.rows()) = xm * llt->solve(e);
    return eta;
}

Hypothesis make_hypothesis(const VectorXd& eta, Index feature, const MatrixXd& covariance,
                           const VectorXd& observed_response) {
    Hypothesis h;
    h.feature_index = feature;
    h.eta = eta;
    h.sigma2 = eta.dot(covariance * eta);
    if (!(h.sigma2 > 0.0)) {
        throw DegenerateVarianceError("test statistic has non-positive variance");
    }
    h.observed_statistic = eta.dot(observed_response);
    return h;
}

std::optional<Interval> intersect(const Interval& a, const Interval& b) {
    Interval r{std::max(a.lower, b.lower), std::min(a.upper, b.upper)};
    if (r.lower > r.upper) {
        return std::nullopt;
    }
    return r;
}

TruncationRegion TruncationRegion::from_intervals(std::vector<Interval> intervals, double merge_gap) {
    std::erase_if(intervals, [](const Interval& iv) { return !(iv.lower <= iv.upper); });
    std::sort(intervals.begin(), intervals.end(),
              [](const Interval& a, const Interval& b) { return a.lower < b.lower; });
    TruncationRegion out;
    for (const auto& iv : intervals) {
        if (!out.intervals_.empty() && iv.lower <= out.intervals_.back().upper + merge_gap) {
            out.intervals_.back().upper = std::max(out.intervals_.back().upper, iv.upper);
        } else {
            out.intervals_.push_back(iv);
        }
    }
    return out;
}

bool TruncationRegion::contains(double z, double tol) const {
    return std::any_of(intervals_.begin(), intervals_.end(),
                       [&](const Interval& iv) { return iv.contains(z, tol); });
}

double TruncationRegion::total_width() const {
    double w = 0.0;
    for (const auto& iv : intervals_) {
        w += iv.width();
    }
    return w;
}

bool TruncationRegion::covers(const TruncationRegion& inner, double tol) const {
    return std::all_of(inner.intervals_.begin(), inner.intervals_.end(), [&](const Interval& in) {
        return std::any_of(intervals_.begin(), intervals_.end(), [&](const Interval& iv) {
            return in.lower >= iv.lower - tol && in.upper <= iv.upper + tol;
        });
    });
}

namespace detail {

std::optional<Eigen::LLT<MatrixXd>> factor_gram(const MatrixXd& gram) {
    if (gram.rows() == 0) {
        return Eigen::LLT<MatrixXd>(gram);
    }
    Eigen::LLT<MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
        return std::nullopt;
    }
    const double max_diag = gram.diagonal().maxCoeff();
    const VectorXd pivots = llt.matrixLLT().diagonal().array().square();
    if (!(max_diag > 0.0) || pivots.minCoeff() < kGramRankTolerance * max_diag) {
        return std::nullopt;
    }
    return llt;
}

MatrixXd select_columns(const MatrixXd& m, std::span<const Index> cols) {
    MatrixXd out(m.rows(), static_cast<Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) {
        out.col(static_cast<Index>(i)) = m.col(cols[i]);
    }
    return out;
}

} // namespace detail

} // namespace ptlsi
