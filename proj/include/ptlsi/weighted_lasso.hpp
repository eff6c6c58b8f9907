#pragma once

#include "ptlsi/data_model.hpp"

#include <optional>
#include <vector>

namespace ptlsi {

/// min_beta (1/2n) ||y - X beta||^2 + lambda * sum_i w_i |beta_i|
struct L1Problem {
    MatrixXd design;
    VectorXd response;
    double sample_scale = 1.0;
    double lambda = 1.0;
    VectorXd coord_weights;
};

void validate(const L1Problem& problem);

struct SolveOptions {
    double tolerance = 1e-8;
    int max_iter = 100000;
    std::optional<VectorXd> warm_start;
    /// Replace the coordinate-descent iterate by the exact active-set solution
    /// when that keeps the KKT residual within tolerance.
    bool polish = true;
    bool record_objective = false;
};

struct L1Solution {
    VectorXd coefficients;
    SignedSet active;
    int iterations = 0;
    double kkt_residual = 0.0;
    /// Objective after each coordinate sweep (only when requested).
    std::vector<double> objective_trace;
};

double objective(const L1Problem& problem, const VectorXd& coefficients);

/// Largest stationarity violation: |g_i + lambda w_i sign(b_i)| on active
/// coordinates, max(0, |g_i| - lambda w_i) elsewhere, with
/// g = (1/n) X^T (X b - y).
double kkt_check(const L1Problem& problem, const VectorXd& coefficients);

/// Cyclic coordinate descent with exact soft-thresholding. Throws
/// SolverError when max_iter sweeps do not reach the tolerance.
L1Solution solve(const L1Problem& problem, const SolveOptions& opts = {});

/// Solver bound to one design, scale, lambda and weight vector, reused across
/// many responses.
class WeightedLassoSolver {
public:
    WeightedLassoSolver(MatrixXd design, double sample_scale, double lambda, VectorXd coord_weights);

    L1Solution solve(const VectorXd& response, const SolveOptions& opts = {}) const;
    double kkt_residual(const VectorXd& response, const VectorXd& coefficients) const;
    double objective(const VectorXd& response, const VectorXd& coefficients) const;

    const MatrixXd& design() const { return design_; }
    double sample_scale() const { return scale_; }
    double lambda() const { return lambda_; }
    const VectorXd& weights() const { return weights_; }

    /// Smallest lambda for which beta = 0 is optimal.
    double lambda_max(const VectorXd& response) const;

private:
    bool polish(const VectorXd& response, VectorXd& beta, double tolerance, double current_residual) const;

    MatrixXd design_;
    double scale_;
    double lambda_;
    VectorXd weights_;
    VectorXd col_sq_; // ||x_j||^2 / n
};

inline double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

} // namespace ptlsi
