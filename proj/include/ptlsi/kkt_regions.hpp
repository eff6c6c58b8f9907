#pragma once

#include "ptlsi/data_model.hpp"
#include "ptlsi/inference.hpp"
#include "ptlsi/pipelines.hpp"

#include <optional>

namespace ptlsi {

/// Constraints slopes * z <= offsets, row by row.
struct LinearSystem1D {
    VectorXd slopes;
    VectorXd offsets;

    Index rows() const { return slopes.size(); }
    static LinearSystem1D concat(const LinearSystem1D& top, const LinearSystem1D& bottom);
};

inline constexpr double kSlopeTolerance = 1e-12;
inline constexpr double kOffsetTolerance = 1e-9;

/// Feasible set of a 1-D linear system. Rows with |slope| <= slope_tol * max|slope|
/// are constant: infeasible when offset < -offset_tol * max(1, max|offset|).
/// Returns nullopt when infeasible.
std::optional<Interval> interval_of(const LinearSystem1D& system, double slope_tol = kSlopeTolerance,
                                    double offset_tol = kOffsetTolerance);

/// One L1 stage restricted to a fixed active set and signs, with response
/// y(z) = y_offset + y_slope z:
///   coef_O(z) = (X_O^T X_O)^{-1} (X_O^T y(z) - n lambda w_O o S_O)
/// plus the sign rows and the inactive subgradient rows
///   s_c(z) = X_c^T (y(z) - X_O coef_O(z)) / (n lambda w_c),  -1 <= s_c <= 1.
struct StageRegion {
    SignedSet active;
    VectorXd coef_offset; // full length, zero off the active set
    VectorXd coef_slope;
    LinearSystem1D system;
    std::optional<Interval> interval;
};

/// Throws SingularSelectionError when the active Gram matrix is singular.
StageRegion stage_region(const MatrixXd& design, const VectorXd& y_offset, const VectorXd& y_slope, double scale,
                         double lambda, const VectorXd& weights, const SignedSet& active);

/// Sign rows for `selected` and two-sided zero rows for its complement, for
/// beta(z) = beta_offset + beta_slope z.
LinearSystem1D selection_system(const VectorXd& beta_offset, const VectorXd& beta_slope, const SignedSet& selected);

/// Affine dependence of every pipeline quantity on z inside one event region.
struct AffinePath {
    VectorXd theta_offset, theta_slope;
    VectorXd w_offset, w_slope;
    VectorXd delta_offset, delta_slope;
    VectorXd beta_offset, beta_slope;

    VectorXd beta_at(double z) const { return beta_offset + beta_slope * z; }
};

/// Z_u, Z_v, Z_t and their intersection for the event (O, S_O, L, S_L, M, S_M)
/// recorded in `trace`.
struct EventRegion {
    StageRegion u;
    StageRegion v;
    LinearSystem1D t_system;
    std::optional<Interval> t;
    std::optional<Interval> combined;
    AffinePath path;
};

EventRegion event_region(const LineSlice& line, const TransferPipeline& pipeline, const SelectionTrace& trace);

/// Repairs an inexact solver trace at z: while the event region excludes z,
/// the most violated KKT row adds or drops one coordinate (stage one first),
/// then the trace is replaced by the exact affine solution at z. Returns the
/// final region; `trace` is updated in place.
EventRegion refine_event(const LineSlice& line, const TransferPipeline& pipeline, SelectionTrace& trace, double z,
                         double slack, int max_steps = 64);

/// Explicit linear maps for one (O_u, S_Ou, L_v, S_Lv):
///   w(z)    = aggregator E_u theta_O(z)
///   y2(z)   = phi Y(z) + iota                (stage-two response Y0 - X0 w)
///   beta(z) = xi Y(z) + zeta
/// `aggregator` is B / N for TransFusion and I_p for Oracle Trans-Lasso;
/// `stage1_selector` is I_N (TransFusion) or P = (I_{n_I}, 0) (Oracle);
/// `target_selector` is Q = (0, I_{n_T}).
struct RegionMatrices {
    MatrixXd aggregator;
    MatrixXd embed_u;          // E_u, columns e_j for j in O_u
    MatrixXd embed_v;          // F_v, columns e_j for j in L_v
    MatrixXd stage1_selector;  // I or P
    MatrixXd target_selector;  // Q
    MatrixXd phi;
    VectorXd iota;
    MatrixXd xi;
    VectorXd zeta;
};

RegionMatrices build_region_matrices(const TransferPipeline& pipeline, const SignedSet& co_active,
                                     const SignedSet& debias_active);

/// Row selectors D_t (rows of M_t) and D_t^c (rows of the complement).
std::pair<MatrixXd, MatrixXd> selection_row_selectors(const SignedSet& selected, Index feature_count);

// TransFusion regions Z_u, Z_v, Z_t.

struct RegionResult {
    std::optional<Interval> interval;
    LinearSystem1D system;
};

RegionResult region_u(const LineSlice& line, const StackedProblem& stacked, const SignedSet& co_active,
                      double lambda0);

RegionResult region_v(const LineSlice& line, const StackedProblem& stacked, const MatrixXd& target_design,
                      const SignedSet& co_active, const SignedSet& debias_active, double lambda0,
                      double lambda_tilde);

RegionResult region_t(const LineSlice& line, const RegionMatrices& matrices, const SignedSet& selected);

// Oracle Trans-Lasso regions. `informative_design` is X^I; the line lives in
// the (Y^I; Y^(0)) coordinates.

RegionResult region_u_otl(const LineSlice& line, const MatrixXd& informative_design, const SignedSet& co_active,
                          double lambda_w);

RegionResult region_v_otl(const LineSlice& line, const MatrixXd& informative_design, const MatrixXd& target_design,
                          const SignedSet& co_active, const SignedSet& debias_active, double lambda_w,
                          double lambda_delta);

RegionResult region_t_otl(const LineSlice& line, const RegionMatrices& matrices, const SignedSet& selected);

} // namespace ptlsi
