#pragma once

#include "ptlsi/data_model.hpp"
#include "ptlsi/weighted_lasso.hpp"

#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace ptlsi {

struct TransFusionConfig {
    double lambda0 = 0.0;
    double lambda_tilde = 0.0;
    std::vector<double> source_weights;

    /// lambda0 = c sqrt(log p / N), lambda_tilde = c sqrt(log p / n_T), a_k = 1.
    static TransFusionConfig defaults(const MultiTaskData& data, double c = 1.0);
};

struct OracleTransLassoConfig {
    double lambda_w = 0.0;
    double lambda_delta = 0.0;
    std::vector<Index> informative; // 0-based source indices

    /// lambda_w = c sqrt(log p / n_I), lambda_delta = c sqrt(log p / n_T).
    static OracleTransLassoConfig defaults(const MultiTaskData& data, std::vector<Index> informative,
                                           double c = 1.0);
};

using PipelineConfig = std::variant<TransFusionConfig, OracleTransLassoConfig>;

enum class PipelineKind { TransFusion, OracleTransLasso };

std::string to_string(PipelineKind kind);
PipelineKind kind_of(const PipelineConfig& cfg);
void validate(const PipelineConfig& cfg, const MultiTaskData& data);

/// Both selection pipelines share one shape:
///
///   stage 1: theta = argmin (1/2 n1) ||R1 Y - A theta||^2 + l1 sum a_i |theta_i|
///            w     = C theta                       (C sums column blocks)
///   stage 2: delta = argmin (1/2 n_T) ||Y0 - X0 w - X0 delta||^2 + l2 ||delta||_1
///            beta  = w + delta
///
/// where Y is the inference response, R1 keeps its first `stage1_rows`
/// entries and Y0 is its last n_T entries. TransFusion uses the block design
/// with A = stacked design, R1 = I and C = (1/N) B; Oracle Trans-Lasso uses the
/// row-stacked informative sources with C = I.
class TransferPipeline {
public:
    static TransferPipeline transfusion(const MultiTaskData& data, const TransFusionConfig& cfg);
    static TransferPipeline oracle_trans_lasso(const MultiTaskData& data, const OracleTransLassoConfig& cfg);
    static TransferPipeline make(const MultiTaskData& data, const PipelineConfig& cfg);

    PipelineKind kind() const { return kind_; }

    /// Runs both stages on the inference response `y`. `warm` seeds the
    /// solvers with a previous trace (same pipeline).
    SelectionTrace fit(const VectorXd& y, const SelectionTrace* warm = nullptr) const;
    SelectionTrace fit_observed() const { return fit(observed_); }

    const VectorXd& observed_response() const { return observed_; }
    const MatrixXd& covariance() const { return covariance_; }
    Index response_size() const { return observed_.size(); }
    /// Rows of the inference response ahead of the target block.
    Index leading_rows() const { return observed_.size() - target_design_.rows(); }

    const WeightedLassoSolver& stage1() const { return *stage1_; }
    const WeightedLassoSolver& stage2() const { return *stage2_; }
    Index stage1_rows() const { return stage1_->design().rows(); }
    const MatrixXd& target_design() const { return target_design_; }
    Index feature_count() const { return target_design_.cols(); }
    /// w_j = sum_b block_coef[b] * theta[b p + j].
    const std::vector<double>& block_coefficients() const { return block_coef_; }

    /// w = C theta.
    VectorXd aggregate(const VectorXd& theta) const;

    const SolveOptions& solve_options() const { return opts_; }
    void set_solve_options(SolveOptions opts) { opts_ = std::move(opts); }

private:
    TransferPipeline() = default;

    PipelineKind kind_ = PipelineKind::TransFusion;
    std::shared_ptr<const WeightedLassoSolver> stage1_;
    std::shared_ptr<const WeightedLassoSolver> stage2_;
    MatrixXd target_design_;
    std::vector<double> block_coef_;
    VectorXd observed_;
    MatrixXd covariance_;
    SolveOptions opts_;
};

/// TransFusion on the observed data: theta from the co-training problem,
/// w = (n_S/N) sum_k beta^(k) + (n_T/N) beta^(0), delta from the debiasing
/// problem, beta = w + delta.
SelectionTrace transfusion_fit(const MultiTaskData& data, const TransFusionConfig& cfg);

/// Oracle Trans-Lasso on the observed data.
SelectionTrace oracle_translasso_fit(const MultiTaskData& data, const OracleTransLassoConfig& cfg);

/// Row-stack of the informative source designs and responses.
struct InformativeStack {
    MatrixXd design;
    VectorXd response;
    MatrixXd covariance;
};
InformativeStack stack_informative(const MultiTaskData& data, const std::vector<Index>& informative);

/// Equation form of the TransFusion aggregate:
/// (n_S/N) sum_k (theta^(k) + theta^(0)) + (n_T/N) theta^(0).
VectorXd transfusion_w_from_betas(const VectorXd& theta, Index source_count, Index source_rows,
                                  Index target_rows);

} // namespace ptlsi
