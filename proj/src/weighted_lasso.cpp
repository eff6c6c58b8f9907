#include "ptlsi/weighted_lasso.hpp"

#include "ptlsi/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ptlsi {

void validate(const L1Problem& problem) {
    if (problem.response.size() != problem.design.rows()) {
        throw ValidationError("L1 problem: response length does not match design rows");
    }
    if (problem.coord_weights.size() != problem.design.cols()) {
        throw ValidationError("L1 problem: weight vector length does not match design columns");
    }
    if (!(problem.lambda > 0.0) || !std::isfinite(problem.lambda)) {
        throw ValidationError("L1 problem: lambda must be positive and finite");
    }
    if (!(problem.sample_scale > 0.0) || !std::isfinite(problem.sample_scale)) {
        throw ValidationError("L1 problem: sample scale must be positive and finite");
    }
    if (!problem.design.allFinite() || !problem.response.allFinite() || !problem.coord_weights.allFinite()) {
        throw ValidationError("L1 problem: non-finite input");
    }
    if (problem.coord_weights.size() > 0 && !(problem.coord_weights.minCoeff() > 0.0)) {
        throw ValidationError("L1 problem: coordinate weights must be positive");
    }
}

WeightedLassoSolver::WeightedLassoSolver(MatrixXd design, double sample_scale, double lambda,
                                         VectorXd coord_weights)
    : design_(std::move(design)), scale_(sample_scale), lambda_(lambda), weights_(std::move(coord_weights)) {
    col_sq_ = design_.colwise().squaredNorm().transpose() / scale_;
}

double WeightedLassoSolver::objective(const VectorXd& response, const VectorXd& beta) const {
    const double rss = (response - design_ * beta).squaredNorm();
    return rss / (2.0 * scale_) + lambda_ * weights_.dot(beta.cwiseAbs());
}

double WeightedLassoSolver::kkt_residual(const VectorXd& response, const VectorXd& beta) const {
    const VectorXd grad = design_.transpose() * (design_ * beta - response) / scale_;
    double worst = 0.0;
    for (Index i = 0; i < beta.size(); ++i) {
        const double pen = lambda_ * weights_[i];
        double v;
        if (beta[i] != 0.0) {
            v = std::abs(grad[i] + pen * (beta[i] > 0.0 ? 1.0 : -1.0));
        } else {
            v = std::max(0.0, std::abs(grad[i]) - pen);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

double WeightedLassoSolver::lambda_max(const VectorXd& response) const {
    const VectorXd corr = (design_.transpose() * response / scale_).cwiseAbs();
    return corr.cwiseQuotient(weights_).maxCoeff();
}

bool WeightedLassoSolver::polish(const VectorXd& response, VectorXd& beta, double tolerance,
                                 double current_residual) const {
    const SignedSet active = SignedSet::from_vector(beta, 0.0);
    if (active.empty()) {
        return false;
    }
    const MatrixXd xa = detail::select_columns(design_, active.indices);
    const auto llt = detail::factor_gram(xa.transpose() * xa);
    if (!llt) {
        return false;
    }
    VectorXd rhs = xa.transpose() * response;
    for (std::size_t k = 0; k < active.size(); ++k) {
        const Index i = active.indices[k];
        rhs[static_cast<Index>(k)] -= scale_ * lambda_ * weights_[i] * active.signs[k];
    }
    const VectorXd exact = llt->solve(rhs);
    VectorXd candidate = VectorXd::Zero(beta.size());
    for (std::size_t k = 0; k < active.size(); ++k) {
        const double v = exact[static_cast<Index>(k)];
        if (v * active.signs[k] <= 0.0) {
            return false;
        }
        candidate[active.indices[k]] = v;
    }
    const double residual = kkt_residual(response, candidate);
    if (residual <= std::max(tolerance, current_residual)) {
        beta = std::move(candidate);
        return true;
    }
    return false;
}

L1Solution WeightedLassoSolver::solve(const VectorXd& response, const SolveOptions& opts) const {
    const Index n_cols = design_.cols();
    if (response.size() != design_.rows()) {
        throw ValidationError("response length does not match design rows");
    }
    if (!response.allFinite()) {
        throw ValidationError("response has non-finite entries");
    }

    VectorXd beta = VectorXd::Zero(n_cols);
    if (opts.warm_start) {
        if (opts.warm_start->size() != n_cols) {
            throw ValidationError("warm start has wrong dimension");
        }
        beta = *opts.warm_start;
    }
    VectorXd resid = response - design_ * beta;

    L1Solution sol;
    if (opts.record_objective) {
        sol.objective_trace.push_back(objective(response, beta));
    }

    // Coordinate update; returns the (scaled) size of the change.
    auto update = [&](Index j) -> double {
        const double cj = col_sq_[j];
        if (cj <= 0.0) {
            const double old = beta[j];
            if (old != 0.0) {
                beta[j] = 0.0;
            }
            return std::abs(old);
        }
        const double old = beta[j];
        const double rho = design_.col(j).dot(resid) / scale_ + cj * old;
        const double fresh = soft_threshold(rho, lambda_ * weights_[j]) / cj;
        if (fresh != old) {
            resid.noalias() -= (fresh - old) * design_.col(j);
            beta[j] = fresh;
        }
        return std::abs(fresh - old) * std::sqrt(cj);
    };

    const double inner_tol = opts.tolerance * 1e-2;
    int sweeps = 0;
    double residual = kInf;
    std::vector<Index> active;
    while (sweeps < opts.max_iter) {
        // Full sweep, then iterate on the active coordinates only.
        double change = 0.0;
        for (Index j = 0; j < n_cols; ++j) {
            change = std::max(change, update(j));
        }
        ++sweeps;
        if (opts.record_objective) {
            sol.objective_trace.push_back(objective(response, beta));
        }
        active.clear();
        for (Index j = 0; j < n_cols; ++j) {
            if (beta[j] != 0.0) active.push_back(j);
        }
        while (change > inner_tol && sweeps < opts.max_iter) {
            change = 0.0;
            for (Index j : active) {
                change = std::max(change, update(j));
            }
            ++sweeps;
            if (opts.record_objective) {
                sol.objective_trace.push_back(objective(response, beta));
            }
        }
        residual = kkt_residual(response, beta);
        if (residual <= opts.tolerance) {
            break;
        }
        // Refresh the residual vector to shed accumulated rounding.
        resid = response - design_ * beta;
    }
    if (residual > opts.tolerance) {
        throw SolverError("weighted lasso did not converge: KKT residual " + std::to_string(residual), residual,
                          sweeps);
    }
    if (opts.polish && polish(response, beta, opts.tolerance, residual)) {
        residual = kkt_residual(response, beta);
        if (opts.record_objective) {
            sol.objective_trace.push_back(objective(response, beta));
        }
    }
    for (Index j = 0; j < n_cols; ++j) {
        if (std::abs(beta[j]) <= kZeroThreshold) beta[j] = 0.0;
    }
    sol.coefficients = std::move(beta);
    sol.active = SignedSet::from_vector(sol.coefficients);
    sol.iterations = sweeps;
    sol.kkt_residual = residual;
    return sol;
}

double objective(const L1Problem& problem, const VectorXd& coefficients) {
    const double rss = (problem.response - problem.design * coefficients).squaredNorm();
    return rss / (2.0 * problem.sample_scale) + problem.lambda * problem.coord_weights.dot(coefficients.cwiseAbs());
}

double kkt_check(const L1Problem& problem, const VectorXd& coefficients) {
    validate(problem);
    if (coefficients.size() != problem.design.cols()) {
        throw ValidationError("coefficient vector has wrong dimension");
    }
    WeightedLassoSolver s(problem.design, problem.sample_scale, problem.lambda, problem.coord_weights);
    return s.kkt_residual(problem.response, coefficients);
}

L1Solution solve(const L1Problem& problem, const SolveOptions& opts) {
    validate(problem);
    WeightedLassoSolver s(problem.design, problem.sample_scale, problem.lambda, problem.coord_weights);
    return s.solve(problem.response, opts);
}

} // namespace ptlsi
