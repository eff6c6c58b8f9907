// ptlsi: selective inference for transfer-learning feature selection.

#include "ptlsi/csv_io.hpp"
#include "ptlsi/driver.hpp"
#include "ptlsi/errors.hpp"
#include "ptlsi/experiments.hpp"
#include "ptlsi/plot_data.hpp"
#include "ptlsi/report_json.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

using namespace ptlsi;

namespace {

unsigned default_threads() {
    if (const char* env = std::getenv("PTLSI_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return static_cast<unsigned>(n);
        } catch (const std::exception&) {
        }
        throw ValidationError("PTLSI_THREADS must be a positive integer");
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> parse_values(const std::string& s, const std::string& field) {
    std::vector<double> out;
    for (const auto& v : split_list(s)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(v, &used));
            if (used != v.size()) throw std::invalid_argument(v);
        } catch (const std::exception&) {
            throw ValidationError(field + ": '" + v + "' is not a number");
        }
    }
    return out;
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("--alpha must lie in (0, 1)");
}

// Writes to `path`, or stdout for "" / "-".
void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << text;
}

struct Common {
    std::string pipeline = "transfusion";
    double lambda_scale = 1.0;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string output;
    std::string manifest;
};

PipelineKind parse_pipeline(const std::string& s) {
    if (s == "transfusion") return PipelineKind::TransFusion;
    if (s == "oracle-translasso") return PipelineKind::OracleTransLasso;
    throw ValidationError("--pipeline must be 'transfusion' or 'oracle-translasso'");
}

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--pipeline", c.pipeline, "transfusion | oracle-translasso");
    cmd->add_option("--lambda-scale", c.lambda_scale, "Multiplier c in lambda = c sqrt(log p / n)");
    cmd->add_option("--alpha", c.alpha, "Significance level in (0, 1)");
    cmd->add_option("--seed", c.seed, "Master seed");
    cmd->add_option("--threads", c.threads, "Worker threads (default: PTLSI_THREADS or all cores)");
    cmd->add_option("-o,--output", c.output, "Output file (default stdout)");
    cmd->add_option("--manifest", c.manifest, "Run manifest JSON path");
}

// ---------------------------------------------------------------- infer

struct InferArgs {
    Common c;
    std::string data;
    std::vector<std::string> sources;
    std::string target_column = "y";
    std::string domain_column;
    std::string target_domain = "target";
    std::vector<Index> informative;
    std::optional<double> lambda0, lambda_tilde, lambda_w, lambda_delta, sigma2;
    std::optional<Index> target_rows, source_rows;
    std::vector<double> source_weights;
    bool standardize = false;
    bool oc = false;
    bool datasplit = false;
    bool timing = false;
    bool no_bonferroni = false;
};

IngestOptions ingest_options(const InferArgs& a) {
    IngestOptions o;
    o.target_column = a.target_column;
    if (!a.domain_column.empty()) o.domain_column = a.domain_column;
    o.target_domain = a.target_domain;
    o.target_rows = a.target_rows;
    o.source_rows = a.source_rows;
    o.seed = a.c.seed;
    o.standardize = a.standardize;
    o.sigma2 = a.sigma2;
    return o;
}

IngestResult load(const InferArgs& a) {
    if (a.data.empty()) throw ValidationError("--data is required");
    const IngestOptions o = ingest_options(a);
    if (!a.domain_column.empty()) {
        if (!a.sources.empty()) throw ValidationError("--sources cannot be combined with --domain-column");
        return ingest_csv(a.data, o);
    }
    if (a.sources.empty()) throw ValidationError("--sources is required without --domain-column");
    return ingest_files(a.data, a.sources, o);
}

PipelineConfig pipeline_config(const InferArgs& a, const MultiTaskData& data) {
    const PipelineKind kind = parse_pipeline(a.c.pipeline);
    if (kind == PipelineKind::TransFusion) {
        TransFusionConfig cfg = TransFusionConfig::defaults(data, a.c.lambda_scale);
        if (a.lambda0) cfg.lambda0 = *a.lambda0;
        if (a.lambda_tilde) cfg.lambda_tilde = *a.lambda_tilde;
        if (!a.source_weights.empty()) cfg.source_weights = a.source_weights;
        return cfg;
    }
    if (a.informative.empty()) throw ValidationError("--informative is required for oracle-translasso");
    OracleTransLassoConfig cfg = OracleTransLassoConfig::defaults(data, a.informative, a.c.lambda_scale);
    if (a.lambda_w) cfg.lambda_w = *a.lambda_w;
    if (a.lambda_delta) cfg.lambda_delta = *a.lambda_delta;
    return cfg;
}

int run_infer(const InferArgs& a, const std::vector<std::string>& argv) {
    check_alpha(a.c.alpha);
    const IngestResult ing = load(a);
    const PipelineConfig cfg = pipeline_config(a, ing.data);

    InferenceOptions opts;
    opts.threads = a.c.threads;
    opts.baselines.bonferroni = !a.no_bonferroni;
    opts.baselines.datasplit = a.datasplit;
    opts.baselines.split_seed = a.c.seed;
    const InferenceResult res = a.oc ? run_ptlsi_oc(ing.data, cfg, opts) : run_ptlsi(ing.data, cfg, opts);

    Json doc = to_json(res, a.timing);
    doc["alpha"] = a.c.alpha;
    Json rejected = Json::array();
    for (const auto& f : res.features) {
        if (f.ok && f.report.p_selective <= a.c.alpha) rejected.push_back(ing.feature_names[static_cast<std::size_t>(f.feature_index)]);
    }
    doc["rejected"] = rejected;
    doc["data"] = {{"features", ing.feature_names},
                   {"target_rows", ing.data.target_rows()},
                   {"source_rows", ing.data.source_rows()},
                   {"source_domains", ing.source_domains},
                   {"dropped_rows", ing.dropped_rows},
                   {"sigma2", ing.sigma2},
                   {"sigma2_estimated", ing.sigma2_estimated},
                   {"standardized", a.standardize}};
    if (ing.sigma2_estimated) {
        doc["data"]["note"] = "noise variance estimated from target residuals; p-values are approximate";
    }
    emit(a.c.output, dump(doc));
    if (!a.c.manifest.empty()) {
        emit(a.c.manifest, dump(run_manifest("infer", argv, {{"config", to_json(cfg)}, {"options", to_json(opts)},
                                                             {"seed", a.c.seed}, {"alpha", a.c.alpha}})));
    }
    return 0;
}

// ---------------------------------------------------------------- experiments

struct SuiteArgs {
    Common c;
    std::string preset = "desk";
    std::string methods = "all";
    std::size_t trials = 500;
    std::string sweep;
    std::string values;
    std::string noise = "gaussian";
    std::string plot_dir;
    std::optional<Index> p, n_target, n_source, informative, uninformative;
    std::optional<double> gamma, upsilon;
};

void add_suite(CLI::App* cmd, SuiteArgs& s) {
    add_common(cmd, s.c);
    cmd->add_option("--preset", s.preset, "desk | paper");
    cmd->add_option("--method", s.methods, "all or a comma list of ptl-si, ptl-si-oc, naive, bonferroni, ds");
    cmd->add_option("--trials", s.trials, "Trials per setting");
    cmd->add_option("--sweep", s.sweep, "n_target | gamma | upsilon | informative | uninformative");
    cmd->add_option("--values", s.values, "Comma list of sweep values");
    cmd->add_option("--noise", s.noise, "gaussian | laplace | skewnorm | t20");
    cmd->add_option("--plot-dir", s.plot_dir, "Directory for plot CSV/SVG files");
    cmd->add_option("--p", s.p, "Feature count");
    cmd->add_option("--n-target", s.n_target, "Target rows");
    cmd->add_option("--n-source", s.n_source, "Rows per source");
    cmd->add_option("--informative", s.informative, "Informative source count");
    cmd->add_option("--uninformative", s.uninformative, "Uninformative source count");
    cmd->add_option("--gamma", s.gamma, "Signal strength");
    cmd->add_option("--upsilon", s.upsilon, "Source perturbation scale");
}

SyntheticSpec base_spec(const SuiteArgs& s, bool null_target) {
    SyntheticSpec spec;
    if (s.preset == "desk") {
        spec = SyntheticSpec::desk();
    } else if (s.preset == "paper") {
        spec = SyntheticSpec::paper();
    } else {
        throw ValidationError("--preset must be 'desk' or 'paper'");
    }
    if (s.p) spec.p = *s.p;
    if (s.n_target) spec.n_target = *s.n_target;
    if (s.n_source) spec.n_source = *s.n_source;
    if (s.informative) spec.informative = *s.informative;
    if (s.uninformative) spec.uninformative = *s.uninformative;
    if (s.gamma) spec.gamma = *s.gamma;
    if (s.upsilon) spec.upsilon = *s.upsilon;
    spec.null_target = null_target;
    spec.noise = parse_noise_family(s.noise);
    validate(spec);
    return spec;
}

std::vector<Method> parse_methods(const std::string& s, bool null_target) {
    if (s == "all") {
        std::vector<Method> ms = all_methods();
        if (!null_target) std::erase(ms, Method::Naive);
        return ms;
    }
    std::vector<Method> ms;
    for (const auto& m : split_list(s)) ms.push_back(parse_method(m));
    if (ms.empty()) throw ValidationError("--method is empty");
    return ms;
}

struct SuiteRow {
    std::string setting;
    double x;
    std::string noise;
    Method method;
    RateEstimate rate;
    std::size_t errors;
    std::size_t skipped;
};

std::string rows_csv(const std::vector<SuiteRow>& rows, const std::string& rate_name) {
    CsvTable t;
    t.header = {"setting", "x", "noise", "method", rate_name, "ci_lo", "ci_hi", "rejections", "tests", "empty_trials",
                "trial_errors", "skipped_features"};
    for (const auto& r : rows) {
        t.rows.push_back({r.setting, format_number(r.x), r.noise, to_string(r.method), format_number(r.rate.rate),
                          format_number(r.rate.ci_low), format_number(r.rate.ci_high),
                          std::to_string(r.rate.rejections), std::to_string(r.rate.trials),
                          std::to_string(r.rate.empty_trials), std::to_string(r.errors), std::to_string(r.skipped)});
    }
    std::ostringstream out;
    write_csv(out, t);
    return out.str();
}

void write_figure(const std::string& dir, const Figure& fig) {
    std::filesystem::create_directories(dir);
    std::ofstream csv(std::filesystem::path(dir) / (fig.name + ".csv"), std::ios::binary);
    write_plot_csv(csv, fig);
    std::ofstream svg(std::filesystem::path(dir) / (fig.name + ".svg"), std::ios::binary);
    write_plot_svg(svg, fig);
}

int run_suite(const std::string& command, const SuiteArgs& s, const std::vector<std::string>& argv) {
    check_alpha(s.c.alpha);
    if (s.trials == 0) throw ValidationError("--trials must be positive");
    const bool null_target = command != "tpr";
    const PipelineKind kind = parse_pipeline(s.c.pipeline);

    std::vector<std::string> noises = {s.noise};
    if (command == "noise") noises = split_list(s.noise == "gaussian" ? "laplace,skewnorm,t20" : s.noise);
    std::vector<double> xs = {0.0};
    std::string setting = s.sweep;
    if (!s.sweep.empty()) {
        xs = parse_values(s.values, "--values");
        if (xs.empty()) throw ValidationError("--values is required with --sweep");
    } else if (!s.values.empty()) {
        throw ValidationError("--values requires --sweep");
    }
    const std::vector<Method> methods =
        parse_methods(s.methods == "all" && command == "noise" ? "ptl-si,bonferroni,ds" : s.methods, null_target);

    std::vector<SuiteRow> rows;
    for (const auto& noise : noises) {
        for (double x : xs) {
            SuiteArgs local = s;
            local.noise = noise;
            SyntheticSpec spec = base_spec(local, null_target);
            if (!s.sweep.empty()) set_parameter(spec, s.sweep, x);
            validate(spec);
            SimulationSpec sim;
            sim.data = spec;
            sim.pipeline = kind;
            sim.methods = methods;
            sim.trials = s.trials;
            sim.master_seed = s.c.seed;
            sim.threads = s.c.threads;
            sim.lambda_scale = s.c.lambda_scale;
            const SimulationResult res = simulate(sim);
            std::size_t errors = 0, skipped = 0;
            for (const auto& t : res.trials) {
                errors += t.errors.empty() ? 0 : 1;
                skipped += t.skipped;
            }
            for (Method m : methods) {
                rows.push_back({setting.empty() ? "base" : setting, x, noise, m,
                                rejection_rate(res, m, s.c.alpha, null_target), errors, skipped});
            }
        }
    }
    const std::string rate_name = null_target ? "fpr" : "tpr";
    emit(s.c.output, rows_csv(rows, rate_name));

    if (!s.plot_dir.empty()) {
        for (const auto& noise : noises) {
            Figure fig;
            fig.name = command + "_" + (setting.empty() ? "base" : setting) + (noises.size() > 1 ? "_" + noise : "");
            fig.title = rate_name + " (" + to_string(kind) + ", " + noise + " noise)";
            fig.x_label = setting.empty() ? "setting" : setting;
            fig.y_label = rate_name;
            for (const auto& r : rows) {
                if (r.noise == noise) {
                    fig.points.push_back({r.x, to_string(r.method), r.rate.rate, r.rate.ci_low, r.rate.ci_high});
                }
            }
            write_figure(s.plot_dir, fig);
        }
    }
    if (!s.c.manifest.empty()) {
        Json cfg{{"pipeline", to_string(kind)}, {"preset", s.preset}, {"trials", s.trials}, {"seed", s.c.seed},
                 {"alpha", s.c.alpha}, {"lambda_scale", s.c.lambda_scale}, {"sweep", s.sweep}, {"values", xs},
                 {"noise", noises}, {"base_spec", to_json(base_spec(s, null_target))}};
        emit(s.c.manifest, dump(run_manifest(command, argv, cfg)));
    }
    return 0;
}

// ---------------------------------------------------------------- bench

int run_bench(const SuiteArgs& s, const std::vector<std::string>& argv) {
    if (s.trials == 0) throw ValidationError("--trials must be positive");
    const PipelineKind kind = parse_pipeline(s.c.pipeline);
    const std::vector<double> sizes = parse_values(s.values.empty() ? "30,40,50" : s.values, "--values");

    CsvTable per;
    per.header = {"n_target", "trial", "feature", "segments", "seconds"};
    std::vector<double> segs, secs;
    Json summary = Json::array();
    for (double n : sizes) {
        SyntheticSpec spec = base_spec(s, true);
        set_parameter(spec, "n_target", n);
        SimulationSpec sim;
        sim.data = spec;
        sim.pipeline = kind;
        sim.methods = {Method::Selective};
        sim.trials = s.trials;
        sim.master_seed = s.c.seed;
        sim.threads = 1; // timing is per p-value on one core
        sim.lambda_scale = s.c.lambda_scale;
        const SimulationResult res = simulate(sim);
        std::vector<double> local_segs, local_secs;
        for (std::size_t t = 0; t < res.trials.size(); ++t) {
            for (const auto& r : res.trials[t].records) {
                per.rows.push_back({format_number(n), std::to_string(t), std::to_string(r.feature),
                                    std::to_string(r.segments), format_number(r.seconds)});
                local_segs.push_back(static_cast<double>(r.segments));
                local_secs.push_back(r.seconds);
            }
        }
        segs.insert(segs.end(), local_segs.begin(), local_segs.end());
        secs.insert(secs.end(), local_secs.begin(), local_secs.end());
        summary.push_back({{"n_target", n},
                           {"p_values", local_segs.size()},
                           {"median_segments", local_segs.empty() ? Json(nullptr) : Json(median(local_segs))},
                           {"median_seconds", local_secs.empty() ? Json(nullptr) : Json(median(local_secs))}});
    }
    std::ostringstream out;
    write_csv(out, per);
    emit(s.c.output, out.str());
    Json doc{{"sizes", summary}};
    if (segs.size() >= 2) {
        const LinearFit fit = least_squares_line(segs, secs);
        doc["seconds_vs_segments"] = {{"intercept", fit.intercept}, {"slope", fit.slope}, {"r_squared", fit.r_squared}};
    }
    std::cerr << dump(doc);
    if (!s.c.manifest.empty()) {
        Json cfg{{"pipeline", to_string(kind)}, {"trials", s.trials}, {"seed", s.c.seed}, {"sizes", sizes},
                 {"base_spec", to_json(base_spec(s, true))}};
        emit(s.c.manifest, dump(run_manifest("bench", argv, cfg)));
    }
    return 0;
}

// ---------------------------------------------------------------- ingest-check

int run_ingest_check(const InferArgs& a, const std::string& emit_path) {
    const IngestResult ing = load(a);
    Json doc{{"target_rows", ing.data.target_rows()},
             {"source_rows", ing.data.source_rows()},
             {"sources", ing.data.source_count()},
             {"features", ing.feature_names},
             {"source_domains", ing.source_domains},
             {"dropped_rows", ing.dropped_rows},
             {"sigma2", ing.sigma2},
             {"sigma2_estimated", ing.sigma2_estimated}};
    emit(a.c.output, dump(doc));
    if (!emit_path.empty()) {
        std::ostringstream out;
        write_csv(out, to_table(ing, a.domain_column.empty() ? "domain" : a.domain_column));
        emit(emit_path, out.str());
    }
    return 0;
}

void add_data_options(CLI::App* cmd, InferArgs& a) {
    cmd->add_option("--data", a.data, "Target CSV, or the combined CSV with --domain-column");
    cmd->add_option("--sources", a.sources, "Source CSVs (comma separated)")->delimiter(',');
    cmd->add_option("--target-column", a.target_column, "Response column name");
    cmd->add_option("--domain-column", a.domain_column, "Domain column for single-file input");
    cmd->add_option("--target-domain", a.target_domain, "Domain value of the target rows");
    cmd->add_option("--target-rows", a.target_rows, "Subsample the target to this many rows");
    cmd->add_option("--source-rows", a.source_rows, "Subsample every source to this many rows");
    cmd->add_option("--sigma2", a.sigma2, "Known noise variance (estimated when absent)");
    cmd->add_flag("--standardize", a.standardize, "Center and scale features");
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    CLI::App app{"Selective inference for transfer-learning feature selection"};
    app.require_subcommand(1);

    InferArgs infer;
    auto* c_infer = app.add_subcommand("infer", "Selective p-values for features selected on data files");
    add_common(c_infer, infer.c);
    add_data_options(c_infer, infer);
    c_infer->add_option("--informative", infer.informative, "0-based informative source indices")->delimiter(',');
    c_infer->add_option("--lambda0", infer.lambda0, "TransFusion co-training penalty");
    c_infer->add_option("--lambda-tilde", infer.lambda_tilde, "TransFusion debiasing penalty");
    c_infer->add_option("--lambda-w", infer.lambda_w, "Oracle Trans-Lasso source penalty");
    c_infer->add_option("--lambda-delta", infer.lambda_delta, "Oracle Trans-Lasso debiasing penalty");
    c_infer->add_option("--source-weights", infer.source_weights, "Per-source penalty weights a_k")->delimiter(',');
    c_infer->add_flag("--oc", infer.oc, "Condition on the observed sub-event only");
    c_infer->add_flag("--datasplit", infer.datasplit, "Add data-splitting p-values");
    c_infer->add_flag("--no-bonferroni", infer.no_bonferroni, "Omit Bonferroni p-values");
    c_infer->add_flag("--timing", infer.timing, "Include wall-clock fields");

    SuiteArgs fpr, tpr, noise, bench;
    auto* c_fpr = app.add_subcommand("fpr", "False positive rates under the global null");
    add_suite(c_fpr, fpr);
    auto* c_tpr = app.add_subcommand("tpr", "True positive rates with signal on the first five features");
    add_suite(c_tpr, tpr);
    auto* c_noise = app.add_subcommand("noise", "FPR under non-Gaussian noise families");
    add_suite(c_noise, noise);
    noise.noise = "laplace,skewnorm,t20";
    auto* c_bench = app.add_subcommand("bench", "Per p-value wall time against segments visited");
    add_suite(c_bench, bench);
    bench.trials = 20;

    InferArgs check;
    std::string emit_path;
    auto* c_check = app.add_subcommand("ingest-check", "Parse and summarize CSV input");
    add_data_options(c_check, check);
    c_check->add_option("-o,--output", check.c.output, "Summary output (default stdout)");
    c_check->add_option("--seed", check.c.seed, "Subsampling seed");
    c_check->add_option("--emit", emit_path, "Write the ingested numeric table back as CSV");
    check.sigma2 = 1.0;

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        auto threads = [](unsigned t) { return t == 0 ? default_threads() : t; };
        if (*c_infer) {
            infer.c.threads = threads(infer.c.threads);
            return run_infer(infer, args);
        }
        if (*c_fpr) {
            fpr.c.threads = threads(fpr.c.threads);
            return run_suite("fpr", fpr, args);
        }
        if (*c_tpr) {
            tpr.c.threads = threads(tpr.c.threads);
            return run_suite("tpr", tpr, args);
        }
        if (*c_noise) {
            noise.c.threads = threads(noise.c.threads);
            return run_suite("noise", noise, args);
        }
        if (*c_bench) return run_bench(bench, args);
        if (*c_check) return run_ingest_check(check, emit_path);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
