#include "ptlsi/kkt_regions.hpp"

#include "ptlsi/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ptlsi {

namespace {

struct ChainSpec {
    const MatrixXd& stage1_design;
    double scale1;
    double lambda1;
    const VectorXd& weights1;
    const std::vector<double>& block_coef;
    const MatrixXd& target_design;
    double lambda2;
};

VectorXd aggregate(const std::vector<double>& block_coef, Index p, const VectorXd& theta) {
    VectorXd w = VectorXd::Zero(p);
    for (std::size_t b = 0; b < block_coef.size(); ++b) {
        const Index off = static_cast<Index>(b) * p;
        for (Index j = 0; j < p; ++j) {
            if (theta[off + j] != 0.0) w[j] += block_coef[b] * theta[off + j];
        }
    }
    return w;
}

struct Chain {
    StageRegion u;
    StageRegion v;
    AffinePath path;
};

Chain chain_region(const LineSlice& line, const ChainSpec& spec, const SignedSet& co_active,
                   const SignedSet& debias_active) {
    const Index m1 = spec.stage1_design.rows();
    const Index n_t = spec.target_design.rows();
    const Index p = spec.target_design.cols();
    Chain c;
    c.u = stage_region(spec.stage1_design, line.a.head(m1), line.b.head(m1), spec.scale1, spec.lambda1,
                       spec.weights1, co_active);
    c.path.theta_offset = c.u.coef_offset;
    c.path.theta_slope = c.u.coef_slope;
    c.path.w_offset = aggregate(spec.block_coef, p, c.u.coef_offset);
    c.path.w_slope = aggregate(spec.block_coef, p, c.u.coef_slope);

    const VectorXd y2_offset = line.a.tail(n_t) - spec.target_design * c.path.w_offset;
    const VectorXd y2_slope = line.b.tail(n_t) - spec.target_design * c.path.w_slope;
    c.v = stage_region(spec.target_design, y2_offset, y2_slope, static_cast<double>(n_t), spec.lambda2,
                       VectorXd::Ones(p), debias_active);
    c.path.delta_offset = c.v.coef_offset;
    c.path.delta_slope = c.v.coef_slope;
    c.path.beta_offset = c.path.w_offset + c.path.delta_offset;
    c.path.beta_slope = c.path.w_slope + c.path.delta_slope;
    return c;
}

ChainSpec spec_of(const TransferPipeline& tp) {
    return ChainSpec{tp.stage1().design(), tp.stage1().sample_scale(), tp.stage1().lambda(), tp.stage1().weights(),
                     tp.block_coefficients(), tp.target_design(), tp.stage2().lambda()};
}

void check_line(const LineSlice& line, Index n) {
    if (line.a.size() != n || line.b.size() != n) {
        throw ValidationError("line dimension does not match the stacked response");
    }
}

} // namespace

LinearSystem1D LinearSystem1D::concat(const LinearSystem1D& top, const LinearSystem1D& bottom) {
    LinearSystem1D out;
    out.slopes.resize(top.rows() + bottom.rows());
    out.offsets.resize(top.rows() + bottom.rows());
    out.slopes << top.slopes, bottom.slopes;
    out.offsets << top.offsets, bottom.offsets;
    return out;
}

std::optional<Interval> interval_of(const LinearSystem1D& system, double slope_tol, double offset_tol) {
    if (system.slopes.size() != system.offsets.size()) {
        throw ValidationError("interval_of: slopes and offsets differ in length");
    }
    if (system.rows() == 0) {
        return Interval{};
    }
    const double slope_scale = system.slopes.cwiseAbs().maxCoeff();
    const double tol = slope_tol * slope_scale;
    const double off_tol = offset_tol * std::max(1.0, system.offsets.cwiseAbs().maxCoeff());
    Interval iv;
    for (Index i = 0; i < system.rows(); ++i) {
        const double s = system.slopes[i];
        const double g = system.offsets[i];
        if (std::abs(s) <= tol) {
            if (g < -off_tol) return std::nullopt;
        } else if (s > 0.0) {
            iv.upper = std::min(iv.upper, g / s);
        } else {
            iv.lower = std::max(iv.lower, g / s);
        }
    }
    if (iv.lower > iv.upper) {
        return std::nullopt;
    }
    return iv;
}

StageRegion stage_region(const MatrixXd& design, const VectorXd& y_offset, const VectorXd& y_slope, double scale,
                         double lambda, const VectorXd& weights, const SignedSet& active) {
    const Index q = design.cols();
    StageRegion out;
    out.active = active;
    out.coef_offset = VectorXd::Zero(q);
    out.coef_slope = VectorXd::Zero(q);

    VectorXd r_off = y_offset;
    VectorXd r_slope = y_slope;
    const Index k = static_cast<Index>(active.size());
    VectorXd sign_rows_slope(k), sign_rows_offset(k);
    if (k > 0) {
        const MatrixXd xo = detail::select_columns(design, active.indices);
        const auto llt = detail::factor_gram(xo.transpose() * xo);
        if (!llt) {
            throw SingularSelectionError("active Gram matrix is singular");
        }
        VectorXd pen(k);
        for (Index i = 0; i < k; ++i) {
            pen[i] = scale * lambda * weights[active.indices[static_cast<std::size_t>(i)]] *
                     active.signs[static_cast<std::size_t>(i)];
        }
        const VectorXd c_off = llt->solve(xo.transpose() * y_offset - pen);
        const VectorXd c_slope = llt->solve(xo.transpose() * y_slope);
        for (Index i = 0; i < k; ++i) {
            const Index j = active.indices[static_cast<std::size_t>(i)];
            const double s = active.signs[static_cast<std::size_t>(i)];
            out.coef_offset[j] = c_off[i];
            out.coef_slope[j] = c_slope[i];
            // s * coef(z) >= 0  <=>  -s * slope * z <= s * offset
            sign_rows_slope[i] = -s * c_slope[i];
            sign_rows_offset[i] = s * c_off[i];
        }
        r_off.noalias() -= xo * c_off;
        r_slope.noalias() -= xo * c_slope;
    }

    const Index n_in = q - k;
    LinearSystem1D sub;
    sub.slopes.resize(2 * n_in);
    sub.offsets.resize(2 * n_in);
    const VectorXd g_off = design.transpose() * r_off;
    const VectorXd g_slope = design.transpose() * r_slope;
    Index row = 0;
    std::size_t next = 0;
    for (Index j = 0; j < q; ++j) {
        if (next < active.size() && active.indices[next] == j) {
            ++next;
            continue;
        }
        const double denom = scale * lambda * weights[j];
        const double s_off = g_off[j] / denom;
        const double s_slope = g_slope[j] / denom;
        sub.slopes[row] = s_slope;
        sub.offsets[row] = 1.0 - s_off;
        sub.slopes[n_in + row] = -s_slope;
        sub.offsets[n_in + row] = 1.0 + s_off;
        ++row;
    }
    out.system = LinearSystem1D::concat(LinearSystem1D{sign_rows_slope, sign_rows_offset}, sub);
    out.interval = interval_of(out.system);
    return out;
}

LinearSystem1D selection_system(const VectorXd& beta_offset, const VectorXd& beta_slope, const SignedSet& selected) {
    const Index p = beta_offset.size();
    const Index m = static_cast<Index>(selected.size());
    const Index mc = p - m;
    LinearSystem1D sys;
    sys.slopes.resize(m + 2 * mc);
    sys.offsets.resize(m + 2 * mc);
    Index row = 0;
    for (std::size_t i = 0; i < selected.size(); ++i) {
        const Index j = selected.indices[i];
        const double s = selected.signs[i];
        sys.slopes[row] = -s * beta_slope[j];
        sys.offsets[row] = s * beta_offset[j];
        ++row;
    }
    Index crow = 0;
    std::size_t next = 0;
    for (Index j = 0; j < p; ++j) {
        if (next < selected.size() && selected.indices[next] == j) {
            ++next;
            continue;
        }
        sys.slopes[m + crow] = beta_slope[j];
        sys.offsets[m + crow] = -beta_offset[j];
        sys.slopes[m + mc + crow] = -beta_slope[j];
        sys.offsets[m + mc + crow] = beta_offset[j];
        ++crow;
    }
    return sys;
}

EventRegion event_region(const LineSlice& line, const TransferPipeline& pipeline, const SelectionTrace& trace) {
    check_line(line, pipeline.response_size());
    Chain c = chain_region(line, spec_of(pipeline), trace.co_active, trace.debias_active);
    EventRegion ev;
    ev.t_system = selection_system(c.path.beta_offset, c.path.beta_slope, trace.selected);
    ev.t = interval_of(ev.t_system);
    ev.u = std::move(c.u);
    ev.v = std::move(c.v);
    ev.path = std::move(c.path);
    if (ev.u.interval && ev.v.interval && ev.t) {
        if (auto uv = intersect(*ev.u.interval, *ev.v.interval)) {
            ev.combined = intersect(*uv, *ev.t);
        }
    }
    return ev;
}

namespace {

// Most violated row of a stage system at z; returns false when none exceeds 0.
bool fix_stage(const StageRegion& st, Index q, double z, SignedSet& active) {
    const Index k = static_cast<Index>(active.size());
    const Index n_in = q - k;
    Index worst = -1;
    double worst_v = 0.0;
    for (Index i = 0; i < st.system.rows(); ++i) {
        const double v = st.system.slopes[i] * z - st.system.offsets[i];
        if (v > worst_v) {
            worst_v = v;
            worst = i;
        }
    }
    if (worst < 0) return false;
    if (worst < k) {
        const auto pos = static_cast<std::size_t>(worst);
        active.indices.erase(active.indices.begin() + static_cast<std::ptrdiff_t>(pos));
        active.signs.erase(active.signs.begin() + static_cast<std::ptrdiff_t>(pos));
        return true;
    }
    const Index r = worst - k;
    const int sign = r < n_in ? 1 : -1;
    const Index nth = r % n_in;
    Index seen = 0;
    std::size_t next = 0;
    for (Index j = 0; j < q; ++j) {
        if (next < active.size() && active.indices[next] == j) {
            ++next;
            continue;
        }
        if (seen++ == nth) {
            const auto at = static_cast<std::ptrdiff_t>(next);
            active.indices.insert(active.indices.begin() + at, j);
            active.signs.insert(active.signs.begin() + at, sign);
            return true;
        }
    }
    return false;
}

} // namespace

EventRegion refine_event(const LineSlice& line, const TransferPipeline& pipeline, SelectionTrace& trace, double z,
                         double slack, int max_steps) {
    EventRegion ev = event_region(line, pipeline, trace);
    bool changed = false;
    for (int step = 0; step < max_steps; ++step) {
        if (ev.combined && ev.combined->contains(z, slack)) break;
        const bool u_ok = ev.u.interval && ev.u.interval->contains(z, slack);
        const bool v_ok = ev.v.interval && ev.v.interval->contains(z, slack);
        if (!u_ok) {
            if (!fix_stage(ev.u, pipeline.stage1().design().cols(), z, trace.co_active)) break;
        } else if (!v_ok) {
            if (!fix_stage(ev.v, pipeline.feature_count(), z, trace.debias_active)) break;
        } else {
            SignedSet sel = SignedSet::from_vector(ev.path.beta_at(z), 0.0);
            if (sel == trace.selected) break;
            trace.selected = std::move(sel);
        }
        changed = true;
        ev = event_region(line, pipeline, trace);
    }
    if (changed) {
        trace.theta = ev.path.theta_offset + ev.path.theta_slope * z;
        trace.w = ev.path.w_offset + ev.path.w_slope * z;
        trace.delta = ev.path.delta_offset + ev.path.delta_slope * z;
        trace.beta = ev.path.beta_offset + ev.path.beta_slope * z;
    }
    return ev;
}

RegionMatrices build_region_matrices(const TransferPipeline& tp, const SignedSet& co_active,
                                     const SignedSet& debias_active) {
    const MatrixXd& a = tp.stage1().design();
    const MatrixXd& x0 = tp.target_design();
    const Index n = tp.response_size();
    const Index m1 = a.rows();
    const Index q = a.cols();
    const Index p = tp.feature_count();
    const Index n_t = x0.rows();
    const auto& coef = tp.block_coefficients();

    RegionMatrices rm;
    rm.aggregator = MatrixXd::Zero(p, q);
    for (std::size_t b = 0; b < coef.size(); ++b) {
        rm.aggregator.middleCols(static_cast<Index>(b) * p, p) = coef[b] * MatrixXd::Identity(p, p);
    }
    rm.stage1_selector = MatrixXd::Zero(m1, n);
    rm.stage1_selector.leftCols(m1).setIdentity();
    rm.target_selector = MatrixXd::Zero(n_t, n);
    rm.target_selector.rightCols(n_t).setIdentity();

    const Index ko = static_cast<Index>(co_active.size());
    rm.embed_u = MatrixXd::Zero(q, ko);
    for (Index i = 0; i < ko; ++i) rm.embed_u(co_active.indices[static_cast<std::size_t>(i)], i) = 1.0;
    const Index kl = static_cast<Index>(debias_active.size());
    rm.embed_v = MatrixXd::Zero(p, kl);
    for (Index i = 0; i < kl; ++i) rm.embed_v(debias_active.indices[static_cast<std::size_t>(i)], i) = 1.0;

    // theta_O(Y) = H1 Y + h1
    MatrixXd h1_map = MatrixXd::Zero(ko, n);
    VectorXd h1 = VectorXd::Zero(ko);
    if (ko > 0) {
        const MatrixXd xo = a * rm.embed_u;
        const auto llt = detail::factor_gram(xo.transpose() * xo);
        if (!llt) throw SingularSelectionError("active Gram matrix is singular");
        h1_map = llt->solve(xo.transpose() * rm.stage1_selector);
        VectorXd pen(ko);
        for (Index i = 0; i < ko; ++i) {
            const auto si = static_cast<std::size_t>(i);
            pen[i] = tp.stage1().weights()[co_active.indices[si]] * co_active.signs[si];
        }
        h1 = -tp.stage1().sample_scale() * tp.stage1().lambda() * llt->solve(pen);
    }
    const MatrixXd w_map = rm.aggregator * rm.embed_u * h1_map;
    const VectorXd w_shift = rm.aggregator * rm.embed_u * h1;
    rm.phi = rm.target_selector - x0 * w_map;
    rm.iota = -x0 * w_shift;

    MatrixXd d_map = MatrixXd::Zero(kl, n);
    VectorXd d_shift = VectorXd::Zero(kl);
    if (kl > 0) {
        const MatrixXd xl = x0 * rm.embed_v;
        const auto llt = detail::factor_gram(xl.transpose() * xl);
        if (!llt) throw SingularSelectionError("debiasing Gram matrix is singular");
        VectorXd s(kl);
        for (Index i = 0; i < kl; ++i) s[i] = debias_active.signs[static_cast<std::size_t>(i)];
        d_map = llt->solve(xl.transpose() * rm.phi);
        d_shift = llt->solve(xl.transpose() * rm.iota - static_cast<double>(n_t) * tp.stage2().lambda() * s);
    }
    rm.xi = w_map + rm.embed_v * d_map;
    rm.zeta = w_shift + rm.embed_v * d_shift;
    return rm;
}

std::pair<MatrixXd, MatrixXd> selection_row_selectors(const SignedSet& selected, Index feature_count) {
    const Index m = static_cast<Index>(selected.size());
    MatrixXd d = MatrixXd::Zero(m, feature_count);
    MatrixXd dc = MatrixXd::Zero(feature_count - m, feature_count);
    Index r = 0, rc = 0;
    for (Index j = 0; j < feature_count; ++j) {
        if (selected.contains(j)) {
            d(r++, j) = 1.0;
        } else {
            dc(rc++, j) = 1.0;
        }
    }
    return {d, dc};
}

RegionResult region_u(const LineSlice& line, const StackedProblem& stacked, const SignedSet& co_active,
                      double lambda0) {
    check_line(line, stacked.total_rows());
    StageRegion r = stage_region(stacked.design, line.a, line.b, static_cast<double>(stacked.total_rows()), lambda0,
                                 stacked.penalty_weights, co_active);
    return {r.interval, std::move(r.system)};
}

RegionResult region_v(const LineSlice& line, const StackedProblem& stacked, const MatrixXd& target_design,
                      const SignedSet& co_active, const SignedSet& debias_active, double lambda0,
                      double lambda_tilde) {
    check_line(line, stacked.total_rows());
    const double n = static_cast<double>(stacked.total_rows());
    std::vector<double> coef(static_cast<std::size_t>(stacked.source_count), static_cast<double>(stacked.source_rows) / n);
    coef.push_back(1.0);
    const ChainSpec spec{stacked.design, n, lambda0, stacked.penalty_weights, coef, target_design, lambda_tilde};
    Chain c = chain_region(line, spec, co_active, debias_active);
    return {c.v.interval, std::move(c.v.system)};
}

RegionResult region_t(const LineSlice& line, const RegionMatrices& matrices, const SignedSet& selected) {
    if (matrices.xi.cols() != line.a.size()) {
        throw ValidationError("region_t: matrices do not match the line dimension");
    }
    const VectorXd beta_offset = matrices.xi * line.a + matrices.zeta;
    const VectorXd beta_slope = matrices.xi * line.b;
    LinearSystem1D sys = selection_system(beta_offset, beta_slope, selected);
    auto iv = interval_of(sys);
    return {iv, std::move(sys)};
}

RegionResult region_u_otl(const LineSlice& line, const MatrixXd& informative_design, const SignedSet& co_active,
                          double lambda_w) {
    const Index n_i = informative_design.rows();
    if (line.a.size() < n_i) {
        throw ValidationError("region_u_otl: line shorter than the informative stack");
    }
    StageRegion r = stage_region(informative_design, line.a.head(n_i), line.b.head(n_i), static_cast<double>(n_i),
                                 lambda_w, VectorXd::Ones(informative_design.cols()), co_active);
    return {r.interval, std::move(r.system)};
}

RegionResult region_v_otl(const LineSlice& line, const MatrixXd& informative_design, const MatrixXd& target_design,
                          const SignedSet& co_active, const SignedSet& debias_active, double lambda_w,
                          double lambda_delta) {
    check_line(line, informative_design.rows() + target_design.rows());
    const std::vector<double> coef{1.0};
    const VectorXd ones = VectorXd::Ones(informative_design.cols());
    const ChainSpec spec{informative_design, static_cast<double>(informative_design.rows()), lambda_w, ones, coef,
                         target_design, lambda_delta};
    Chain c = chain_region(line, spec, co_active, debias_active);
    return {c.v.interval, std::move(c.v.system)};
}

RegionResult region_t_otl(const LineSlice& line, const RegionMatrices& matrices, const SignedSet& selected) {
    return region_t(line, matrices, selected);
}

} // namespace ptlsi
