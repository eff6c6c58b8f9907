#pragma once

#include "ptlsi/driver.hpp"
#include "ptlsi/pipelines.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace ptlsi {

/// All families are standardized to mean 0 and variance 1.
enum class NoiseFamily { Gaussian, Laplace, SkewNormal, StudentT };

std::string to_string(NoiseFamily f);
NoiseFamily parse_noise_family(std::string_view name);

inline constexpr double kSkewNormalShape = 10.0;
inline constexpr double kStudentDof = 20.0;

/// One standardized noise draw.
double draw_noise(NoiseFamily family, std::mt19937_64& rng);

struct SyntheticSpec {
    Index p = 50;
    Index n_target = 30;
    Index n_source = 40;
    Index informative = 2;
    Index uninformative = 1;
    double gamma = 0.5;
    double upsilon = 0.01;
    bool null_target = true;
    NoiseFamily noise = NoiseFamily::Gaussian;
    std::uint64_t seed = 0;

    Index source_count() const { return informative + uninformative; }

    static SyntheticSpec desk();
    static SyntheticSpec paper();
};

void validate(const SyntheticSpec& spec);

/// Sets a sweepable field by name: n_target, n_source, p, gamma, upsilon,
/// informative, uninformative.
void set_parameter(SyntheticSpec& spec, std::string_view name, double value);

struct SyntheticData {
    MultiTaskData data;
    VectorXd target_beta;
    std::vector<VectorXd> source_betas;
    std::vector<Index> informative; // 0-based source indices (the first |I| sources)
};

/// Sources 0..|I|-1 are informative, the rest uninformative. Designs iid
/// N(0, 1), identity covariances.
SyntheticData generate(const SyntheticSpec& spec);

/// Pipeline configuration with default lambdas (scale c) for `data`.
PipelineConfig default_config(PipelineKind kind, const MultiTaskData& data, const std::vector<Index>& informative,
                              double c = 1.0);

enum class Method { Selective, OverConditioned, Naive, Bonferroni, DataSplit };

std::string to_string(Method m);
Method parse_method(std::string_view name);
const std::vector<Method>& all_methods();

struct PValueRecord {
    Method method = Method::Selective;
    Index feature = 0;
    bool is_null = true;
    double p = 1.0;
    std::size_t segments = 0; // selective only
    double seconds = 0.0;     // selective only
};

struct TrialRecord {
    std::uint64_t seed = 0;
    std::size_t selected = 0;        // |M_obs| of the main pipeline
    std::size_t skipped = 0;         // features whose inference failed
    std::vector<PValueRecord> records;
    std::vector<std::string> errors; // per-trial failures (trial-level)
};

struct SimulationSpec {
    SyntheticSpec data;
    PipelineKind pipeline = PipelineKind::TransFusion;
    std::vector<Method> methods = {Method::Selective, Method::Naive};
    std::size_t trials = 500;
    std::uint64_t master_seed = 0;
    unsigned threads = 1;
    double lambda_scale = 1.0;
};

struct SimulationResult {
    SimulationSpec spec;
    std::vector<TrialRecord> trials; // ordered by trial index
    double wall_seconds = 0.0;
};

/// Seed of trial `index`, derived from the master seed by seed-sequence
/// splitting (independent of thread count).
std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t index);

/// Runs one trial: generate, fit, and collect p-values for `methods`.
TrialRecord run_trial(const SimulationSpec& spec, std::uint64_t seed);

SimulationResult simulate(const SimulationSpec& spec);

struct RateEstimate {
    std::size_t rejections = 0;
    std::size_t trials = 0; // number of tested hypotheses
    double rate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t empty_trials = 0; // trials contributing no tests
};

/// Wilson score interval at 95%.
RateEstimate make_rate(std::size_t rejections, std::size_t trials);

/// Fraction of tested null (null_features = true) or non-null features with
/// p <= alpha for `method`.
RateEstimate rejection_rate(const SimulationResult& res, Method method, double alpha, bool null_features);

RateEstimate estimate_fpr(const SimulationSpec& spec, Method method, double alpha);
RateEstimate estimate_tpr(const SimulationSpec& spec, Method method, double alpha);

std::vector<double> collect_p_values(const SimulationResult& res, Method method, bool null_features);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

/// One-sample Kolmogorov-Smirnov test against Uniform(0, 1).
KsResult ks_uniform(std::vector<double> sample);

/// Kolmogorov limiting survival function P(K > x).
double kolmogorov_survival(double x);

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r_squared = 0.0;
};

LinearFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> v);

} // namespace ptlsi
