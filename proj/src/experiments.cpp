#include "ptlsi/experiments.hpp"

#include "ptlsi/errors.hpp"

#include <boost/random/laplace_distribution.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <thread>

namespace ptlsi {

std::string to_string(NoiseFamily f) {
    switch (f) {
    case NoiseFamily::Gaussian: return "gaussian";
    case NoiseFamily::Laplace: return "laplace";
    case NoiseFamily::SkewNormal: return "skewnorm";
    case NoiseFamily::StudentT: return "t20";
    }
    return "?";
}

NoiseFamily parse_noise_family(std::string_view name) {
    if (name == "gaussian" || name == "normal") return NoiseFamily::Gaussian;
    if (name == "laplace") return NoiseFamily::Laplace;
    if (name == "skewnorm" || name == "skew-normal") return NoiseFamily::SkewNormal;
    if (name == "t20" || name == "student-t") return NoiseFamily::StudentT;
    throw ValidationError("unknown noise family '" + std::string(name) + "'");
}

double draw_noise(NoiseFamily family, std::mt19937_64& rng) {
    switch (family) {
    case NoiseFamily::Gaussian: {
        std::normal_distribution<double> n01;
        return n01(rng);
    }
    case NoiseFamily::Laplace: {
        // scale 1/sqrt(2) gives unit variance
        boost::random::laplace_distribution<double> lap(0.0, std::numbers::sqrt2 / 2.0);
        return lap(rng);
    }
    case NoiseFamily::SkewNormal: {
        // delta |U0| + sqrt(1 - delta^2) U1 is skew-normal with shape alpha
        std::normal_distribution<double> n01;
        const double delta = kSkewNormalShape / std::sqrt(1.0 + kSkewNormalShape * kSkewNormalShape);
        const double u0 = n01(rng);
        const double u1 = n01(rng);
        const double x = delta * std::abs(u0) + std::sqrt(1.0 - delta * delta) * u1;
        const double mean = delta * std::sqrt(2.0 / std::numbers::pi);
        const double var = 1.0 - 2.0 * delta * delta / std::numbers::pi;
        return (x - mean) / std::sqrt(var);
    }
    case NoiseFamily::StudentT: {
        std::student_t_distribution<double> t(kStudentDof);
        return t(rng) / std::sqrt(kStudentDof / (kStudentDof - 2.0));
    }
    }
    return 0.0;
}

SyntheticSpec SyntheticSpec::desk() { return SyntheticSpec{}; }

SyntheticSpec SyntheticSpec::paper() {
    SyntheticSpec s;
    s.p = 300;
    s.n_target = 50;
    s.n_source = 100;
    s.informative = 3;
    s.uninformative = 2;
    return s;
}

void validate(const SyntheticSpec& spec) {
    if (spec.p < 1) throw ValidationError("spec.p must be positive");
    if (spec.n_target < 1) throw ValidationError("spec.n_target must be positive");
    if (spec.n_source < 1) throw ValidationError("spec.n_source must be positive");
    if (spec.informative < 0 || spec.uninformative < 0 || spec.source_count() < 1) {
        throw ValidationError("spec: source counts must be non-negative with at least one source");
    }
    if (!(spec.gamma >= 0.0) || !std::isfinite(spec.gamma)) throw ValidationError("spec.gamma must be >= 0");
    if (!(spec.upsilon >= 0.0) || !std::isfinite(spec.upsilon)) throw ValidationError("spec.upsilon must be >= 0");
}

void set_parameter(SyntheticSpec& spec, std::string_view name, double value) {
    auto count = [&](Index& field) {
        if (!(value >= 0.0) || value != std::floor(value)) {
            throw ValidationError("parameter '" + std::string(name) + "' must be a non-negative integer");
        }
        field = static_cast<Index>(value);
    };
    if (name == "n_target") count(spec.n_target);
    else if (name == "n_source") count(spec.n_source);
    else if (name == "p") count(spec.p);
    else if (name == "informative") count(spec.informative);
    else if (name == "uninformative") count(spec.uninformative);
    else if (name == "gamma") spec.gamma = value;
    else if (name == "upsilon") spec.upsilon = value;
    else throw ValidationError("unknown sweep parameter '" + std::string(name) + "'");
}

namespace {

TaskData draw_task(Index n, const VectorXd& beta, NoiseFamily noise, std::mt19937_64& rng) {
    std::normal_distribution<double> n01;
    MatrixXd x(n, beta.size());
    for (Index j = 0; j < x.cols(); ++j) {
        for (Index i = 0; i < n; ++i) x(i, j) = n01(rng);
    }
    VectorXd y = x * beta;
    for (Index i = 0; i < n; ++i) y[i] += draw_noise(noise, rng);
    return TaskData::with_isotropic_noise(std::move(x), std::move(y));
}

} // namespace

SyntheticData generate(const SyntheticSpec& spec) {
    validate(spec);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> n01;
    const Index head = std::min<Index>(5, spec.p);

    SyntheticData out;
    out.target_beta = VectorXd::Zero(spec.p);
    if (!spec.null_target) out.target_beta.head(head).setConstant(spec.gamma);

    for (Index k = 0; k < spec.source_count(); ++k) {
        VectorXd b = VectorXd::Zero(spec.p);
        b.head(head).setConstant(spec.gamma);
        b[0] = -spec.gamma;
        const bool informative = k < spec.informative;
        const Index span = std::min<Index>(informative ? 25 : 50, spec.p);
        const double sd = std::sqrt(spec.upsilon * 0.5 * (informative ? 1.0 : 10.0));
        if (sd > 0.0) {
            for (Index j = 0; j < span; ++j) b[j] += sd * n01(rng);
        }
        if (informative) out.informative.push_back(k);
        out.source_betas.push_back(std::move(b));
    }

    out.data.target = draw_task(spec.n_target, out.target_beta, spec.noise, rng);
    for (const auto& b : out.source_betas) {
        out.data.sources.push_back(draw_task(spec.n_source, b, spec.noise, rng));
    }
    return out;
}

PipelineConfig default_config(PipelineKind kind, const MultiTaskData& data, const std::vector<Index>& informative,
                              double c) {
    if (kind == PipelineKind::TransFusion) return TransFusionConfig::defaults(data, c);
    return OracleTransLassoConfig::defaults(data, informative, c);
}

std::string to_string(Method m) {
    switch (m) {
    case Method::Selective: return "ptl-si";
    case Method::OverConditioned: return "ptl-si-oc";
    case Method::Naive: return "naive";
    case Method::Bonferroni: return "bonferroni";
    case Method::DataSplit: return "ds";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    for (Method m : all_methods()) {
        if (name == to_string(m)) return m;
    }
    if (name == "selective") return Method::Selective;
    if (name == "oc") return Method::OverConditioned;
    throw ValidationError("unknown method '" + std::string(name) + "'");
}

const std::vector<Method>& all_methods() {
    static const std::vector<Method> all{Method::Selective, Method::OverConditioned, Method::Naive,
                                         Method::Bonferroni, Method::DataSplit};
    return all;
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(std::uint64_t(index) >> 32)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (std::uint64_t(words[0]) << 32) | words[1];
}

namespace {

bool wants(const std::vector<Method>& ms, Method m) { return std::find(ms.begin(), ms.end(), m) != ms.end(); }

} // namespace

TrialRecord run_trial(const SimulationSpec& spec, std::uint64_t seed) {
    TrialRecord tr;
    tr.seed = seed;
    SyntheticSpec ds = spec.data;
    ds.seed = seed;
    try {
        const SyntheticData syn = generate(ds);
        const MultiTaskData& data = syn.data;
        const PipelineConfig cfg = default_config(spec.pipeline, data, syn.informative, spec.lambda_scale);
        const TransferPipeline pipeline = TransferPipeline::make(data, cfg);
        const SelectionTrace observed = pipeline.fit_observed();
        tr.selected = observed.selected.size();

        const bool full = wants(spec.methods, Method::Selective);
        const bool oc = wants(spec.methods, Method::OverConditioned);
        const bool naive = wants(spec.methods, Method::Naive);
        const bool bonf = wants(spec.methods, Method::Bonferroni);

        for (Index j : observed.selected.indices) {
            const bool is_null = syn.target_beta[j] == 0.0;
            if (full) {
                InferenceOptions opts;
                opts.conditioning = Conditioning::Full;
                opts.search.keep_segments = false;
                const FeatureResult fr = infer_feature(pipeline, observed, j, opts);
                if (fr.ok) {
                    tr.records.push_back({Method::Selective, j, is_null, fr.report.p_selective,
                                          fr.stats.segments_visited, fr.stats.wall_seconds});
                } else {
                    ++tr.skipped;
                }
            }
            if (oc) {
                InferenceOptions opts;
                opts.conditioning = Conditioning::OverConditioned;
                const FeatureResult fr = infer_feature(pipeline, observed, j, opts);
                if (fr.ok) {
                    tr.records.push_back({Method::OverConditioned, j, is_null, fr.report.p_selective, 1, 0.0});
                } else {
                    ++tr.skipped;
                }
            }
            if (naive || bonf) {
                const VectorXd eta =
                    build_eta(pipeline.target_design(), observed.selected.indices, j, pipeline.leading_rows());
                const LineSlice line = decompose(pipeline.observed_response(), eta, pipeline.covariance());
                const double pn = naive_p(line.z_obs, line.sigma);
                if (naive) tr.records.push_back({Method::Naive, j, is_null, pn, 0, 0.0});
                if (bonf) {
                    tr.records.push_back(
                        {Method::Bonferroni, j, is_null, bonferroni_p(pn, pipeline.feature_count()), 0, 0.0});
                }
            }
        }

        if (wants(spec.methods, Method::DataSplit)) {
            const DataSplitResult dsr = datasplit_p(data, cfg, seed);
            for (std::size_t k = 0; k < dsr.selected.size(); ++k) {
                const Index j = dsr.selected.indices[k];
                if (std::isfinite(dsr.p_values[k])) {
                    tr.records.push_back({Method::DataSplit, j, syn.target_beta[j] == 0.0, dsr.p_values[k], 0, 0.0});
                }
            }
        }
    } catch (const std::exception& e) {
        tr.errors.emplace_back(e.what());
    }
    return tr;
}

SimulationResult simulate(const SimulationSpec& spec) {
    validate(spec.data);
    if (spec.methods.empty()) throw ValidationError("simulation: no methods requested");
    const auto start = std::chrono::steady_clock::now();
    SimulationResult res;
    res.spec = spec;
    res.trials.resize(spec.trials);
    const unsigned workers =
        std::max(1u, std::min<unsigned>(spec.threads, static_cast<unsigned>(std::max<std::size_t>(1, spec.trials))));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < spec.trials; i = next++) {
            res.trials[i] = run_trial(spec, trial_seed(spec.master_seed, i));
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

RateEstimate make_rate(std::size_t rejections, std::size_t trials) {
    RateEstimate r;
    r.rejections = rejections;
    r.trials = trials;
    if (trials == 0) {
        r.ci_high = 1.0;
        return r;
    }
    const double n = static_cast<double>(trials);
    const double ph = static_cast<double>(rejections) / n;
    const double z = 1.959963984540054;
    const double denom = 1.0 + z * z / n;
    const double centre = (ph + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(ph * (1.0 - ph) / n + z * z / (4.0 * n * n)) / denom;
    r.rate = ph;
    r.ci_low = std::min(ph, std::max(0.0, centre - half));
    r.ci_high = std::max(ph, std::min(1.0, centre + half));
    return r;
}

RateEstimate rejection_rate(const SimulationResult& res, Method method, double alpha, bool null_features) {
    std::size_t tests = 0, rejections = 0, empty = 0;
    for (const auto& t : res.trials) {
        std::size_t here = 0;
        for (const auto& r : t.records) {
            if (r.method != method || r.is_null != null_features) continue;
            ++here;
            if (r.p <= alpha) ++rejections;
        }
        tests += here;
        if (here == 0) ++empty;
    }
    RateEstimate out = make_rate(rejections, tests);
    out.empty_trials = empty;
    return out;
}

RateEstimate estimate_fpr(const SimulationSpec& spec, Method method, double alpha) {
    if (!spec.data.null_target) throw ValidationError("estimate_fpr: spec must be in null mode");
    SimulationSpec s = spec;
    s.methods = {method};
    return rejection_rate(simulate(s), method, alpha, true);
}

RateEstimate estimate_tpr(const SimulationSpec& spec, Method method, double alpha) {
    if (spec.data.null_target) throw ValidationError("estimate_tpr: spec must be in signal mode");
    SimulationSpec s = spec;
    s.methods = {method};
    return rejection_rate(simulate(s), method, alpha, false);
}

std::vector<double> collect_p_values(const SimulationResult& res, Method method, bool null_features) {
    std::vector<double> out;
    for (const auto& t : res.trials) {
        for (const auto& r : t.records) {
            if (r.method == method && r.is_null == null_features) out.push_back(r.p);
        }
    }
    return out;
}

double kolmogorov_survival(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 0.3) {
        // small-x form: 1 - sqrt(2 pi)/x sum exp(-(2k-1)^2 pi^2 / (8 x^2))
        double s = 0.0;
        for (int k = 1; k <= 50; ++k) {
            const double t = (2.0 * k - 1.0) * std::numbers::pi / x;
            s += std::exp(-t * t / 8.0);
        }
        return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / x * s, 0.0, 1.0);
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        s += (k % 2 == 1 ? term : -term);
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult ks_uniform(std::vector<double> sample) {
    KsResult out;
    out.n = sample.size();
    if (sample.empty()) return out;
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double u = std::clamp(sample[i], 0.0, 1.0);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
    }
    out.statistic = d;
    const double rn = std::sqrt(n);
    out.p_value = kolmogorov_survival((rn + 0.12 + 0.11 / rn) * d);
    return out;
}

LinearFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ValidationError("least_squares_line: need at least two paired points");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    f.r_squared = (sxx > 0.0 && syy > 0.0) ? sxy * sxy / (sxx * syy) : 0.0;
    return f;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

} // namespace ptlsi
