#include "ptlsi/pipelines.hpp"

#include "ptlsi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace ptlsi {

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ValidationError(std::string(name) + " must be positive and finite");
    }
}

double rate(double c, Index p, Index n) {
    return c * std::sqrt(std::log(static_cast<double>(std::max<Index>(p, 2))) / static_cast<double>(n));
}

} // namespace

TransFusionConfig TransFusionConfig::defaults(const MultiTaskData& data, double c) {
    TransFusionConfig cfg;
    cfg.lambda0 = rate(c, data.feature_count(), data.total_rows());
    cfg.lambda_tilde = rate(c, data.feature_count(), data.target_rows());
    cfg.source_weights.assign(data.sources.size(), 1.0);
    return cfg;
}

OracleTransLassoConfig OracleTransLassoConfig::defaults(const MultiTaskData& data, std::vector<Index> informative,
                                                        double c) {
    OracleTransLassoConfig cfg;
    const Index n_i = static_cast<Index>(informative.size()) * data.source_rows();
    cfg.lambda_w = rate(c, data.feature_count(), std::max<Index>(n_i, 1));
    cfg.lambda_delta = rate(c, data.feature_count(), data.target_rows());
    cfg.informative = std::move(informative);
    return cfg;
}

std::string to_string(PipelineKind kind) {
    return kind == PipelineKind::TransFusion ? "transfusion" : "oracle-translasso";
}

PipelineKind kind_of(const PipelineConfig& cfg) {
    return std::holds_alternative<TransFusionConfig>(cfg) ? PipelineKind::TransFusion
                                                          : PipelineKind::OracleTransLasso;
}

void validate(const PipelineConfig& cfg, const MultiTaskData& data) {
    if (const auto* tf = std::get_if<TransFusionConfig>(&cfg)) {
        require_positive(tf->lambda0, "lambda0");
        require_positive(tf->lambda_tilde, "lambda_tilde");
        if (tf->source_weights.size() != data.sources.size()) {
            throw ValidationError("source_weights: expected one weight per source task");
        }
        for (double a : tf->source_weights) require_positive(a, "source_weights");
        return;
    }
    const auto& otl = std::get<OracleTransLassoConfig>(cfg);
    require_positive(otl.lambda_w, "lambda_w");
    require_positive(otl.lambda_delta, "lambda_delta");
    if (otl.informative.empty()) {
        throw ValidationError("informative set must be nonempty");
    }
    std::set<Index> seen;
    for (Index k : otl.informative) {
        if (k < 0 || k >= data.source_count()) {
            throw ValidationError("informative set: source index " + std::to_string(k) + " out of range");
        }
        if (!seen.insert(k).second) {
            throw ValidationError("informative set: duplicate source index " + std::to_string(k));
        }
    }
}

InformativeStack stack_informative(const MultiTaskData& data, const std::vector<Index>& informative) {
    const Index n_s = data.source_rows();
    const Index n_i = static_cast<Index>(informative.size()) * n_s;
    InformativeStack out;
    out.design.resize(n_i, data.feature_count());
    out.response.resize(n_i);
    out.covariance = MatrixXd::Zero(n_i, n_i);
    for (std::size_t r = 0; r < informative.size(); ++r) {
        const auto& src = data.sources[static_cast<std::size_t>(informative[r])];
        const Index off = static_cast<Index>(r) * n_s;
        out.design.middleRows(off, n_s) = src.design;
        out.response.segment(off, n_s) = src.response;
        out.covariance.block(off, off, n_s, n_s) = src.covariance;
    }
    return out;
}

TransferPipeline TransferPipeline::transfusion(const MultiTaskData& data, const TransFusionConfig& cfg) {
    validate(PipelineConfig{cfg}, data);
    StackedProblem st = build_stacked(data, cfg.source_weights);
    TransferPipeline tp;
    tp.kind_ = PipelineKind::TransFusion;
    const double n = static_cast<double>(st.total_rows());
    tp.stage1_ = std::make_shared<const WeightedLassoSolver>(std::move(st.design), n, cfg.lambda0,
                                                             std::move(st.penalty_weights));
    tp.stage2_ = std::make_shared<const WeightedLassoSolver>(
        data.target.design, static_cast<double>(data.target_rows()), cfg.lambda_tilde,
        VectorXd::Ones(data.feature_count()));
    tp.target_design_ = data.target.design;
    // B / N: n_S/N on every source block, (K n_S + n_T)/N = 1 on the target block.
    tp.block_coef_.assign(static_cast<std::size_t>(data.source_count()),
                          static_cast<double>(data.source_rows()) / n);
    tp.block_coef_.push_back(static_cast<double>(data.source_count() * data.source_rows() + data.target_rows()) / n);
    tp.observed_ = std::move(st.response);
    tp.covariance_ = std::move(st.covariance);
    return tp;
}

TransferPipeline TransferPipeline::oracle_trans_lasso(const MultiTaskData& data, const OracleTransLassoConfig& cfg) {
    validate(PipelineConfig{cfg}, data);
    validate(data);
    InformativeStack stack = stack_informative(data, cfg.informative);
    const Index n_i = stack.design.rows();
    const Index n_t = data.target_rows();
    TransferPipeline tp;
    tp.kind_ = PipelineKind::OracleTransLasso;
    tp.stage1_ = std::make_shared<const WeightedLassoSolver>(std::move(stack.design), static_cast<double>(n_i),
                                                             cfg.lambda_w, VectorXd::Ones(data.feature_count()));
    tp.stage2_ = std::make_shared<const WeightedLassoSolver>(data.target.design, static_cast<double>(n_t),
                                                             cfg.lambda_delta, VectorXd::Ones(data.feature_count()));
    tp.target_design_ = data.target.design;
    tp.block_coef_ = {1.0};
    tp.observed_.resize(n_i + n_t);
    tp.observed_ << stack.response, data.target.response;
    tp.covariance_ = MatrixXd::Zero(n_i + n_t, n_i + n_t);
    tp.covariance_.topLeftCorner(n_i, n_i) = stack.covariance;
    tp.covariance_.bottomRightCorner(n_t, n_t) = data.target.covariance;
    return tp;
}

TransferPipeline TransferPipeline::make(const MultiTaskData& data, const PipelineConfig& cfg) {
    return std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, TransFusionConfig>) {
                return transfusion(data, c);
            } else {
                return oracle_trans_lasso(data, c);
            }
        },
        cfg);
}

VectorXd TransferPipeline::aggregate(const VectorXd& theta) const {
    const Index p = feature_count();
    VectorXd w = VectorXd::Zero(p);
    for (std::size_t b = 0; b < block_coef_.size(); ++b) {
        const Index off = static_cast<Index>(b) * p;
        for (Index j = 0; j < p; ++j) {
            if (theta[off + j] != 0.0) {
                w[j] += block_coef_[b] * theta[off + j];
            }
        }
    }
    return w;
}

SelectionTrace TransferPipeline::fit(const VectorXd& y, const SelectionTrace* warm) const {
    if (y.size() != observed_.size()) {
        throw ValidationError("response length does not match the pipeline's stacked response");
    }
    SolveOptions o1 = opts_;
    SolveOptions o2 = opts_;
    if (warm != nullptr) {
        o1.warm_start = warm->theta;
        o2.warm_start = warm->delta;
    }
    const L1Solution s1 = stage1_->solve(y.head(stage1_rows()), o1);

    SelectionTrace tr;
    tr.theta = s1.coefficients;
    tr.co_active = s1.active;
    tr.w = aggregate(tr.theta);

    const Index n_t = target_design_.rows();
    const VectorXd y2 = y.tail(n_t) - target_design_ * tr.w;
    const L1Solution s2 = stage2_->solve(y2, o2);
    tr.delta = s2.coefficients;
    tr.debias_active = s2.active;
    tr.beta = tr.w + tr.delta;
    tr.selected = SignedSet::from_vector(tr.beta);
    return tr;
}

SelectionTrace transfusion_fit(const MultiTaskData& data, const TransFusionConfig& cfg) {
    return TransferPipeline::transfusion(data, cfg).fit_observed();
}

SelectionTrace oracle_translasso_fit(const MultiTaskData& data, const OracleTransLassoConfig& cfg) {
    return TransferPipeline::oracle_trans_lasso(data, cfg).fit_observed();
}

VectorXd transfusion_w_from_betas(const VectorXd& theta, Index source_count, Index source_rows,
                                  Index target_rows) {
    const Index p = theta.size() / (source_count + 1);
    const double n = static_cast<double>(source_count * source_rows + target_rows);
    const VectorXd beta0 = theta.tail(p);
    VectorXd w = (static_cast<double>(target_rows) / n) * beta0;
    for (Index k = 0; k < source_count; ++k) {
        const VectorXd beta_k = theta.segment(k * p, p) + beta0;
        w += (static_cast<double>(source_rows) / n) * beta_k;
    }
    return w;
}

} // namespace ptlsi
