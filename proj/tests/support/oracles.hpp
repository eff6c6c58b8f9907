#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls the region or sweep code under test.

#include "ptlsi/experiments.hpp"
#include "ptlsi/parametric_search.hpp"
#include "ptlsi/pipelines.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using ptlsi::Index;
using ptlsi::MatrixXd;
using ptlsi::VectorXd;

inline double lasso_objective(const MatrixXd& x, const VectorXd& y, double n, double lambda, const VectorXd& w,
                              const VectorXd& b) {
    return (y - x * b).squaredNorm() / (2.0 * n) + lambda * w.dot(b.cwiseAbs());
}

/// Minimum of a 1-D lasso objective on a uniform grid refined three times.
inline double grid_lasso_1d(const MatrixXd& x, const VectorXd& y, double n, double lambda, double w) {
    double lo = -50.0, hi = 50.0, best = 0.0;
    VectorXd wv = VectorXd::Constant(1, w);
    for (int round = 0; round < 6; ++round) {
        double best_f = INFINITY;
        const int steps = 2000;
        for (int i = 0; i <= steps; ++i) {
            VectorXd b(1);
            b[0] = lo + (hi - lo) * i / steps;
            const double f = lasso_objective(x, y, n, lambda, wv, b);
            if (f < best_f) {
                best_f = f;
                best = b[0];
            }
        }
        const double h = (hi - lo) / steps;
        lo = best - 2 * h;
        hi = best + 2 * h;
    }
    return best;
}

/// 2-D brute force: coarse grid, then repeated local grid refinement.
inline VectorXd grid_lasso_2d(const MatrixXd& x, const VectorXd& y, double n, double lambda, const VectorXd& w) {
    double c0 = 0.0, c1 = 0.0, half = 20.0;
    for (int round = 0; round < 12; ++round) {
        double best_f = INFINITY, b0 = c0, b1 = c1;
        const int steps = 80;
        for (int i = 0; i <= steps; ++i) {
            for (int j = 0; j <= steps; ++j) {
                VectorXd b(2);
                b << c0 - half + 2 * half * i / steps, c1 - half + 2 * half * j / steps;
                const double f = lasso_objective(x, y, n, lambda, w, b);
                if (f < best_f) {
                    best_f = f;
                    b0 = b[0];
                    b1 = b[1];
                }
            }
        }
        c0 = b0;
        c1 = b1;
        half *= 0.2;
    }
    VectorXd out(2);
    out << c0, c1;
    return out;
}

/// Closed-form active-set solution (X_O^T X_O)^{-1}(X_O^T y - n lambda w_O o S_O),
/// embedded in a full-length vector.
inline VectorXd closed_form(const MatrixXd& x, const VectorXd& y, double n, double lambda, const VectorXd& w,
                            const ptlsi::SignedSet& active) {
    VectorXd out = VectorXd::Zero(x.cols());
    const Index k = static_cast<Index>(active.size());
    if (k == 0) return out;
    MatrixXd xo(x.rows(), k);
    VectorXd pen(k);
    for (Index i = 0; i < k; ++i) {
        const Index j = active.indices[static_cast<std::size_t>(i)];
        xo.col(i) = x.col(j);
        pen[i] = n * lambda * w[j] * active.signs[static_cast<std::size_t>(i)];
    }
    const VectorXd c = (xo.transpose() * xo).colPivHouseholderQr().solve(xo.transpose() * y - pen);
    for (Index i = 0; i < k; ++i) out[active.indices[static_cast<std::size_t>(i)]] = c[i];
    return out;
}

/// Random multi-task instance with iid N(0,1) designs and noise.
inline ptlsi::MultiTaskData small_instance(std::mt19937_64& rng, Index p, Index k, Index n_s, Index n_t,
                                           double signal) {
    std::normal_distribution<double> n01;
    auto task = [&](Index n, bool source) {
        MatrixXd x(n, p);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < p; ++j) x(i, j) = n01(rng);
        VectorXd beta = VectorXd::Zero(p);
        for (Index j = 0; j < std::min<Index>(2, p); ++j) beta[j] = source ? signal : 0.5 * signal;
        VectorXd y = x * beta;
        for (Index i = 0; i < n; ++i) y[i] += n01(rng);
        return ptlsi::TaskData::with_isotropic_noise(x, y);
    };
    ptlsi::MultiTaskData d;
    d.target = task(n_t, false);
    for (Index s = 0; s < k; ++s) d.sources.push_back(task(n_s, true));
    return d;
}

struct GridComparison {
    std::size_t points = 0;
    std::size_t excluded = 0;
    std::size_t disagreements = 0;
    double first_disagreement = NAN;
};

/// Refits the pipeline at z = z_min + i h over the window and compares
/// "selected set equals the observed one" with region membership. Grid points
/// within h of a reported endpoint are excluded.
inline GridComparison grid_scan(const ptlsi::LineSlice& line, const ptlsi::TransferPipeline& pipeline,
                                const std::vector<Index>& observed, const ptlsi::TruncationRegion& region,
                                double step_sigmas = 1e-3) {
    std::vector<double> ends;
    for (const auto& iv : region.intervals()) {
        ends.push_back(iv.lower);
        ends.push_back(iv.upper);
    }
    const double h = step_sigmas * line.sigma;
    GridComparison cmp;
    ptlsi::SelectionTrace prev;
    bool have_prev = false;
    const auto steps = static_cast<long>(std::floor((line.z_max - line.z_min) / h));
    for (long i = 0; i <= steps; ++i) {
        const double z = line.z_min + static_cast<double>(i) * h;
        ++cmp.points;
        const bool near_end =
            std::any_of(ends.begin(), ends.end(), [&](double e) { return std::abs(e - z) < h; });
        ptlsi::SelectionTrace tr = pipeline.fit(line.at(z), have_prev ? &prev : nullptr);
        const bool match = tr.selected.indices == observed;
        prev = std::move(tr);
        have_prev = true;
        if (near_end) {
            ++cmp.excluded;
            continue;
        }
        if (match != region.contains(z)) {
            if (cmp.disagreements == 0) cmp.first_disagreement = z;
            ++cmp.disagreements;
        }
    }
    return cmp;
}

} // namespace oracle
