#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "run_config.hpp"
#include "survbv/cox.hpp"
#include "survbv/cox_path.hpp"
#include "survbv/data_io.hpp"
#include "survbv/error.hpp"
#include "survbv/harness.hpp"

namespace survbv::cli {

namespace {

int exit_code_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::InvalidArgument:
            return kUsageError;
        case ErrorKind::Diverged:
        case ErrorKind::DegenerateFold:
        case ErrorKind::CalibrationFailed:
        case ErrorKind::TooManyDegenerateDraws:
            return kNumericalFailure;
        default:
            return kDataError;
    }
}

// Flag wins, then SURVBV_SEED, then the fallback.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
    if (flag) return *flag;
    if (const char* env = std::getenv("SURVBV_SEED"); env && *env) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw ConfigError(std::string("SURVBV_SEED is not an unsigned integer: '") + env + "'");
    }
    return fallback;
}

std::string significant(double v, int digits = 6) {
    std::ostringstream s;
    s << std::setprecision(digits) << v;
    return s.str();
}

struct SchemaFlags {
    std::string time_column = "time";
    std::string event_column = "status";
    std::vector<std::string> features;

    void attach(CLI::App& app) {
        app.add_option("--time-col", time_column, "Name of the time column")->capture_default_str();
        app.add_option("--event-col", event_column, "Name of the event indicator column (0/1)")->capture_default_str();
        app.add_option("--features", features, "Comma-separated feature columns (default: all remaining)")
            ->delimiter(',');
    }

    DatasetSchema schema() const { return {time_column, event_column, features}; }
};

SurvivalDataset load_reporting(const std::string& path, const DatasetSchema& schema, std::ostream& err) {
    LoadStats stats;
    auto data = load_csv(path, schema, &stats);
    if (stats.rows_dropped > 0) {
        err << "note: dropped " << stats.rows_dropped << " of " << stats.rows_read
            << " rows with missing values\n";
    }
    return data;
}

void print_coefficients(std::ostream& out, const SurvivalDataset& data, const Vector& beta) {
    std::size_t width = 4;
    for (const auto& name : data.feature_names()) width = std::max(width, name.size());
    out << "coefficients:\n";
    for (std::size_t j = 0; j < data.p(); ++j) {
        out << "  " << std::left << std::setw(static_cast<int>(width)) << data.feature_names()[j] << "  "
            << std::right << std::setw(14) << significant(beta[static_cast<Eigen::Index>(j)], 8) << '\n';
    }
}

struct FitCommand {
    std::string data_path;
    SchemaFlags schema;
    std::string algo = "coxph";
    std::string selection = "cv_deviance";
    std::string fixed_lambda;
    std::size_t folds = 5;
    std::size_t n_lambda = 100;
    std::optional<double> lambda_min_ratio;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App& app) {
        app.add_option("--data", data_path, "Survival dataset CSV")->required();
        schema.attach(app);
        app.add_option("--algo", algo, "Algorithm: coxph or coxpath")
            ->check(CLI::IsMember({"coxph", "coxpath"}))
            ->capture_default_str();
        app.add_option("--selection", selection, "coxpath model selection: cv_deviance or cv_cindex")
            ->check(CLI::IsMember({"cv_deviance", "cv_cindex"}))
            ->capture_default_str();
        app.add_option("--fixed-lambda", fixed_lambda,
                       "coxpath: use this penalty instead of cross-validation ('max' = lambda_max)");
        app.add_option("--folds", folds, "coxpath cross-validation folds")->capture_default_str();
        app.add_option("--n-lambda", n_lambda, "coxpath grid size")->capture_default_str();
        app.add_option("--lambda-min-ratio", lambda_min_ratio, "coxpath smallest lambda / lambda_max");
        app.add_option("--seed", seed, "Fold-assignment seed (overrides SURVBV_SEED)");
    }

    int run(std::ostream& out, std::ostream& err) const {
        const auto data = load_reporting(data_path, schema.schema(), err);
        out << "observations: " << data.n() << "  events: " << data.event_count() << "  features: " << data.p()
            << '\n';
        Vector beta;
        if (algo == "coxph") {
            const auto model = fit_cox(data);
            out << "algorithm: coxph\n";
            out << "converged: " << (model.converged ? "yes" : "no") << " (" << model.iterations << " iterations)\n";
            out << "log partial likelihood: " << significant(model.final_log_partial_likelihood, 10) << '\n';
            beta = model.beta;
        } else {
            PathConfig config;
            config.folds = folds;
            config.n_lambda = n_lambda;
            config.lambda_min_ratio = lambda_min_ratio;
            config.seed = resolve_seed(seed, 0);
            const double top = lambda_max(data);
            if (!fixed_lambda.empty()) {
                double value = top;
                if (fixed_lambda != "max") {
                    try {
                        std::size_t used = 0;
                        value = std::stod(fixed_lambda, &used);
                        if (used != fixed_lambda.size()) throw std::invalid_argument("trailing characters");
                    } catch (const std::exception&) {
                        throw ConfigError("--fixed-lambda expects a number or 'max'");
                    }
                }
                if (value <= 0.0) {
                    throw ConfigError("--fixed-lambda must be positive (lambda_max is " + significant(top, 10) + ")");
                }
                config.selection = Selection::fixed(value);
            } else {
                config.selection = selection == "cv_cindex" ? Selection::cv_cindex() : Selection::cv_deviance();
            }
            const auto path = fit_path(data, config);
            beta = path.selected_beta();
            out << "algorithm: coxpath\n";
            out << "selection: " << config.selection.name() << '\n';
            out << "lambda_max: " << significant(top, 10) << '\n';
            out << "selected lambda: " << significant(path.selected_lambda(), 10) << " (index " << path.selected_index
                << " of " << path.size() << ")\n";
            out << "nonzero coefficients: " << path.nonzero_counts[path.selected_index] << '\n';
            if (path.nonzero_counts[path.selected_index] == 0) out << "empty model: every coefficient is zero\n";
        }
        print_coefficients(out, data, beta);
        out << "in-sample concordance: " << significant(concordance_index(risk_scores(beta, data), data), 8) << '\n';
        return kSuccess;
    }
};

struct ExperimentCommand {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 0;
    std::optional<std::size_t> repetitions;
    std::optional<std::size_t> replicates;
    std::vector<std::size_t> sizes;
    std::string out_dir;
    bool quiet = false;

    void attach(CLI::App& app) {
        app.add_option("--config", config_path, "Experiment configuration (YAML)")->required();
        app.add_option("--seed", seed, "Master seed (overrides config and SURVBV_SEED)");
        app.add_option("--workers", workers, "Parallel fits per cell; 0 = all hardware threads")->capture_default_str();
        app.add_option("--repetitions", repetitions, "Override the number of test-set repetitions");
        app.add_option("--replicates", replicates, "Override training replicates per size");
        app.add_option("--sizes", sizes, "Override training sizes (comma-separated)")->delimiter(',');
        app.add_option("--out", out_dir, "Override the output directory");
        app.add_flag("--quiet", quiet, "Suppress progress output");
    }

    int run(std::ostream& out, std::ostream& err) const {
        RunConfig config = load_run_config(config_path);
        auto& protocol = config.protocol;
        protocol.master_seed = resolve_seed(seed, protocol.master_seed);
        protocol.workers = workers;
        if (repetitions) protocol.repetitions = *repetitions;
        if (replicates) protocol.replicates_per_size = *replicates;
        if (!sizes.empty()) protocol.training_sizes = sizes;
        if (!out_dir.empty()) config.output_dir = out_dir;
        if (config.output_dir.empty()) throw ConfigError("no output directory: set output_dir or pass --out");

        SurvivalDataset data;
        std::string source;
        if (config.synthetic) {
            data = generate_synthetic(*config.synthetic).data;
            source = "synthetic(n=" + std::to_string(config.synthetic->n) +
                     ", seed=" + std::to_string(config.synthetic->seed) + ")";
        } else {
            data = load_reporting(config.dataset_path.string(), config.schema, err);
            source = config.dataset_path.filename().string();
        }
        try {
            protocol.validate(data.n());
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::InvalidArgument) throw ConfigError(e.what());
            throw;
        }
        if (!quiet) {
            protocol.on_progress = [&err](const ProgressEvent& e) {
                err << "[" << e.cells_done << "/" << e.cells_total << "] repetition " << e.repetition + 1
                    << ", training size " << e.train_size << " done\n";
            };
        }

        const auto curve = run_protocol(data, protocol);
        write_curves(curve, make_run_metadata(data, protocol, source), config.output_dir);

        out << "wrote " << (config.output_dir / "curves.csv").string() << " and "
            << (config.output_dir / "run_meta.json").string() << '\n';
        for (const auto& point : curve.points) {
            out << "  " << std::left << std::setw(10) << point.algorithm << std::right << " size " << std::setw(5)
                << point.train_size << "  error " << format_number(point.report.expected_error) << "  variance "
                << format_number(point.report.variance) << "  failures " << point.fit_failures << '\n';
        }
        return kSuccess;
    }
};

struct SynthCommand {
    std::size_t n = 0;
    std::vector<double> beta;
    double censoring = 0.3;
    std::string baseline = "exponential";
    double rate = 1.0;
    double shape = 1.0;
    double scale = 1.0;
    std::optional<std::uint64_t> seed;
    std::string out_path;
    std::string truth_path;

    void attach(CLI::App& app) {
        app.add_option("--n", n, "Number of observations")->required();
        app.add_option("--beta", beta, "True coefficients (comma-separated)")->required()->delimiter(',');
        app.add_option("--censoring", censoring, "Target censored fraction in [0, 1)")->capture_default_str();
        app.add_option("--baseline", baseline, "Baseline hazard: exponential or weibull")
            ->check(CLI::IsMember({"exponential", "weibull"}))
            ->capture_default_str();
        app.add_option("--rate", rate, "Exponential baseline rate")->capture_default_str();
        app.add_option("--shape", shape, "Weibull shape")->capture_default_str();
        app.add_option("--scale", scale, "Weibull scale")->capture_default_str();
        app.add_option("--seed", seed, "Generator seed (overrides SURVBV_SEED)");
        app.add_option("--out", out_path, "Output dataset CSV")->required();
        app.add_option("--truth", truth_path, "Ground-truth JSON (default: <out>.truth.json)");
    }

    int run(std::ostream& out, std::ostream&) const {
        SyntheticSpec spec;
        spec.n = n;
        spec.true_beta = Eigen::Map<const Vector>(beta.data(), static_cast<Eigen::Index>(beta.size()));
        spec.censoring_rate_target = censoring;
        spec.baseline = baseline == "weibull" ? Baseline::weibull(shape, scale) : Baseline::exponential(rate);
        spec.seed = resolve_seed(seed, 0);
        const auto synthetic = generate_synthetic(spec);
        const std::string truth = truth_path.empty() ? out_path + ".truth.json" : truth_path;
        write_csv(synthetic.data, out_path);
        write_ground_truth(synthetic, spec, truth);
        out << "wrote " << out_path << " (" << synthetic.data.n() << " rows, " << synthetic.data.event_count()
            << " events, censored fraction " << significant(synthetic.realized_censoring, 4) << ") and " << truth << '\n';
        return kSuccess;
    }
};

struct CindexCommand {
    std::string data_path;
    std::string scores_path;
    SchemaFlags schema;

    void attach(CLI::App& app) {
        app.add_option("--data", data_path, "Survival dataset CSV")->required();
        app.add_option("--scores", scores_path, "One risk score per line (optional header); higher = riskier")
            ->required();
        schema.attach(app);
    }

    int run(std::ostream& out, std::ostream& err) const {
        const auto data = load_reporting(data_path, schema.schema(), err);
        std::ifstream in(scores_path);
        if (!in) throw Error(ErrorKind::IoError, "cannot open " + scores_path);
        std::vector<double> values;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
            if (line.empty()) continue;
            try {
                std::size_t used = 0;
                const double v = std::stod(line, &used);
                if (used != line.size()) throw std::invalid_argument("trailing characters");
                values.push_back(v);
            } catch (const std::exception&) {
                if (line_no == 1) continue;  // header
                throw Error(ErrorKind::ParseError, scores_path + " line " + std::to_string(line_no) + ": not a number");
            }
        }
        const Vector scores = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
        const auto counts = concordance_counts(scores, data);
        out << "concordance: " << significant(counts.index(), 10) << '\n';
        out << "comparable pairs: " << counts.total() << " (concordant " << counts.concordant << ", discordant "
            << counts.discordant << ", tied scores " << counts.tied_score << ")\n";
        return kSuccess;
    }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"survbv: bias-variance decomposition of concordance error for Cox models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "survbv 0.1.0");

    FitCommand fit;
    ExperimentCommand experiment;
    SynthCommand synth;
    CindexCommand cindex;
    auto* fit_app = app.add_subcommand("fit", "Fit Cox PH or the L1 path on a dataset and print coefficients");
    auto* experiment_app = app.add_subcommand("experiment", "Run the learning-curve protocol from a config file");
    auto* synth_app = app.add_subcommand("synth", "Generate a synthetic proportional-hazards dataset");
    auto* cindex_app = app.add_subcommand("cindex", "Concordance index of a score file against a dataset");
    fit.attach(*fit_app);
    experiment.attach(*experiment_app);
    synth.attach(*synth_app);
    cindex.attach(*cindex_app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsageError;
    }

    try {
        if (fit_app->parsed()) return fit.run(out, err);
        if (experiment_app->parsed()) return experiment.run(out, err);
        if (synth_app->parsed()) return synth.run(out, err);
        if (cindex_app->parsed()) return cindex.run(out, err);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
    return kUsageError;
}

}  // namespace survbv::cli
