#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ptlsi {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Coefficients with |c| <= this are treated as zero.
inline constexpr double kZeroThreshold = 1e-10;

/// Gram factorizations are rejected when the smallest Cholesky pivot falls
/// below this fraction of the largest diagonal entry.
inline constexpr double kGramRankTolerance = 1e-12;

/// Symmetry tolerance for user-supplied covariance blocks.
inline constexpr double kSymmetryTolerance = 1e-10;

/// One regression task: design (n x p), response (n) and the known noise
/// covariance of the response (n x n).
struct TaskData {
    MatrixXd design;
    VectorXd response;
    MatrixXd covariance;

    /// Covariance sigma2 * I.
    static TaskData with_isotropic_noise(MatrixXd design, VectorXd response, double sigma2 = 1.0);

    Index rows() const { return design.rows(); }
    Index cols() const { return design.cols(); }
};

/// Throws ValidationError naming `name` when shapes disagree, entries are
/// non-finite, or the covariance is not symmetric positive definite.
void validate_task(const TaskData& task, std::string_view name);

/// A target task plus K >= 1 source tasks sharing p features. All sources
/// have the same row count n_S.
struct MultiTaskData {
    TaskData target;
    std::vector<TaskData> sources;

    Index feature_count() const { return target.cols(); }
    Index source_count() const { return static_cast<Index>(sources.size()); }
    Index source_rows() const { return sources.empty() ? 0 : sources.front().rows(); }
    Index target_rows() const { return target.rows(); }
    Index total_rows() const { return source_count() * source_rows() + target_rows(); }
};

void validate(const MultiTaskData& data);

/// Block layout of the co-training problem. Row blocks are ordered
/// (source 1, ..., source K, target); column blocks (theta^(1), ...,
/// theta^(K), theta^(0)). Source block k holds X^(k) in column blocks k and
/// K; the target block holds X^(0) in column block K only.
struct StackedProblem {
    MatrixXd design;
    VectorXd response;
    MatrixXd covariance;
    VectorXd penalty_weights;
    Index source_count = 0;
    Index feature_count = 0;
    Index source_rows = 0;
    Index target_rows = 0;

    Index total_rows() const { return design.rows(); }
};

StackedProblem build_stacked(const MultiTaskData& data, std::span<const double> source_weights);

/// Block-diagonal covariance of the stacked response (sources then target).
MatrixXd stacked_covariance(const MultiTaskData& data);
/// (Y^(1); ...; Y^(K); Y^(0)).
VectorXd stacked_response(const MultiTaskData& data);

/// Index set with one sign (+1/-1) per index; indices ascending.
struct SignedSet {
    std::vector<Index> indices;
    std::vector<int> signs;

    std::size_t size() const { return indices.size(); }
    bool empty() const { return indices.empty(); }
    bool contains(Index i) const;

    /// Collects { i : |v_i| > kZeroThreshold } with the signs of v.
    static SignedSet from_vector(const VectorXd& v, double threshold = kZeroThreshold);

    friend bool operator==(const SignedSet&, const SignedSet&) = default;
};

/// Output of one pipeline run. For TransFusion `theta` is the co-training
/// solution of length (K+1)p; for Oracle Trans-Lasso it equals `w`.
struct SelectionTrace {
    SignedSet co_active;
    SignedSet debias_active;
    SignedSet selected;
    VectorXd theta;
    VectorXd w;
    VectorXd delta;
    VectorXd beta;

    /// Same active sets and signs at every stage.
    bool same_event(const SelectionTrace& other) const;
};

/// (M, S_M) under the zero threshold.
SignedSet select(const SelectionTrace& trace);

struct Hypothesis {
    Index feature_index = 0;
    VectorXd eta;
    double sigma2 = 0.0;
    double observed_statistic = 0.0;
};

/// Test direction for feature `feature` of the selected set `selected`:
/// zeros over the first `leading_rows` entries followed by
/// X_M (X_M^T X_M)^{-1} e_j. Throws SingularSelectionError when X_M is rank
/// deficient and ValidationError when `feature` is not in `selected`.
VectorXd build_eta(const MatrixXd& target_design, std::span<const Index> selected, Index feature,
                   Index leading_rows);

Hypothesis make_hypothesis(const VectorXd& eta, Index feature, const MatrixXd& covariance,
                           const VectorXd& observed_response);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
    double lower = -kInf;
    double upper = kInf;

    double width() const { return upper - lower; }
    bool contains(double z, double tol = 0.0) const { return z >= lower - tol && z <= upper + tol; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

std::optional<Interval> intersect(const Interval& a, const Interval& b);

/// Sorted union of disjoint closed intervals.
class TruncationRegion {
public:
    TruncationRegion() = default;

    /// Sorts, drops empty intervals and merges those whose gap is <= merge_gap.
    static TruncationRegion from_intervals(std::vector<Interval> intervals, double merge_gap = 0.0);
    static TruncationRegion whole_line() { return from_intervals({Interval{}}); }

    const std::vector<Interval>& intervals() const { return intervals_; }
    bool empty() const { return intervals_.empty(); }
    bool contains(double z, double tol = 0.0) const;
    double total_width() const;
    /// True when every interval of `inner` lies inside some interval of this region.
    bool covers(const TruncationRegion& inner, double tol = 0.0) const;

private:
    std::vector<Interval> intervals_;
};

namespace detail {

/// Cholesky of a Gram matrix with the rank rule above; nullopt when singular.
std::optional<Eigen::LLT<MatrixXd>> factor_gram(const MatrixXd& gram);

MatrixXd select_columns(const MatrixXd& m, std::span<const Index> cols);

} // namespace detail

} // namespace ptlsi
