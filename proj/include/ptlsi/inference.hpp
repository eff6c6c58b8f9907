#pragma once

#include "ptlsi/data_model.hpp"
#include "ptlsi/pipelines.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ptlsi {

inline constexpr double kDefaultWindowSigmas = 20.0;

/// Y(z) = a + b z, restricted to z in [z_min, z_max].
struct LineSlice {
    VectorXd a;
    VectorXd b;
    double z_obs = 0.0;
    double sigma = 0.0;
    double z_min = 0.0;
    double z_max = 0.0;

    VectorXd at(double z) const { return a + b * z; }
};

/// b = Sigma eta / (eta^T Sigma eta), a = (I - b eta^T) y_obs,
/// window = [-k sigma, k sigma] with sigma = sqrt(eta^T Sigma eta), widened
/// on one side to z_obs -/+ k sigma when the observed statistic lies beyond it.
LineSlice decompose(const VectorXd& y_obs, const VectorXd& eta, const MatrixXd& covariance,
                    double window_sigmas = kDefaultWindowSigmas);

/// P(|Z| >= |z_obs| | Z in region) for Z ~ N(0, sigma^2).
double truncated_p(double z_obs, double sigma, const TruncationRegion& region);

/// 2 (1 - Phi(|z_obs| / sigma)).
double naive_p(double z_obs, double sigma);

/// min(1, 2^p * p_naive).
double bonferroni_p(double p_naive, Index feature_count);

struct PValueReport {
    Index feature_index = 0;
    int sign = 0;
    double z_obs = 0.0;
    double sigma = 0.0;
    TruncationRegion region;
    double p_selective = 1.0;
    double p_naive = 1.0;
    std::optional<double> p_bonferroni;
    std::optional<double> p_datasplit;
};

struct DataSplitResult {
    std::vector<Index> selection_rows; // target rows used for selection
    std::vector<Index> inference_rows; // target rows used for the z-tests
    SignedSet selected;
    std::vector<double> p_values;      // aligned with selected.indices; NaN when undefined
    std::vector<std::string> failures; // empty string when the p-value is defined
};

/// Seeded half split of the target rows: the pipeline runs on the sources
/// plus the first half; each selected coefficient is z-tested by least squares
/// on the second half with the known covariance of those rows.
DataSplitResult datasplit_p(const MultiTaskData& data, const PipelineConfig& cfg, std::uint64_t split_seed);

/// Rows of the target task kept for selection / inference by datasplit_p.
std::pair<std::vector<Index>, std::vector<Index>> split_rows(Index n_rows, std::uint64_t split_seed);

/// Restricts the target task to `rows` (design, response and covariance block).
TaskData subset_rows(const TaskData& task, const std::vector<Index>& rows);

} // namespace ptlsi
