#include "survbv/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "survbv/error.hpp"
#include "survbv/random.hpp"

namespace survbv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::string unquote(std::string_view s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return std::string(s);
}

bool is_missing(std::string_view cell) {
    return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "na";
}

bool parse_double(std::string_view cell, double& out) {
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc() && ptr == cell.data() + cell.size();
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& column, const std::string& what) {
    fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ", column '" + column + "': " + what);
}

void check_stream(const std::ostream& out, const std::filesystem::path& path) {
    if (!out) fail(ErrorKind::IoError, "failed writing " + path.string());
}

// Writes through a sibling temporary and renames on success.
template <typename Body>
void write_atomically(const std::filesystem::path& path, Body body) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    try {
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) fail(ErrorKind::IoError, "cannot open " + tmp.string() + " for writing");
            body(out);
            out.flush();
            check_stream(out, tmp);
        }
        std::filesystem::rename(tmp, path);
    } catch (...) {
        std::error_code ignored;
        std::filesystem::remove(tmp, ignored);
        throw;
    }
}

std::string format_exact(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

}  // namespace

SurvivalDataset parse_csv(std::istream& in, const DatasetSchema& schema, LoadStats* stats) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) fail(ErrorKind::SchemaError, "missing header row");
    if (line.size() >= 3 && std::memcmp(line.data(), "\xEF\xBB\xBF", 3) == 0) line.erase(0, 3);

    std::vector<std::string> header;
    std::map<std::string, std::size_t> position;
    for (auto field : split_fields(line)) {
        header.push_back(unquote(field));
        if (!position.emplace(header.back(), header.size() - 1).second) {
            fail(ErrorKind::SchemaError, "duplicate column '" + header.back() + "'");
        }
    }
    const auto column_of = [&](const std::string& name) {
        const auto it = position.find(name);
        if (it == position.end()) fail(ErrorKind::SchemaError, "column '" + name + "' not found in header");
        return it->second;
    };
    const std::size_t time_col = column_of(schema.time_column);
    const std::size_t event_col = column_of(schema.event_column);
    if (time_col == event_col) fail(ErrorKind::SchemaError, "time and event columns must differ");

    std::vector<std::size_t> feature_cols;
    std::vector<std::string> feature_names;
    if (schema.feature_columns.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c != time_col && c != event_col) {
                feature_cols.push_back(c);
                feature_names.push_back(header[c]);
            }
        }
    } else {
        for (const auto& name : schema.feature_columns) {
            const std::size_t c = column_of(name);
            if (c == time_col || c == event_col) {
                fail(ErrorKind::SchemaError, "feature column '" + name + "' overlaps the time/event columns");
            }
            if (std::find(feature_cols.begin(), feature_cols.end(), c) != feature_cols.end()) {
                fail(ErrorKind::SchemaError, "feature column '" + name + "' listed twice");
            }
            feature_cols.push_back(c);
            feature_names.push_back(name);
        }
    }

    std::vector<Observation> rows;
    LoadStats local;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ++local.rows_read;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                                            " fields, found " + std::to_string(fields.size()));
        }
        const bool missing = is_missing(fields[time_col]) || is_missing(fields[event_col]) ||
                             std::any_of(feature_cols.begin(), feature_cols.end(),
                                         [&](std::size_t c) { return is_missing(fields[c]); });
        if (missing) {
            ++local.rows_dropped;
            continue;
        }
        Observation obs;
        if (!parse_double(fields[time_col], obs.time)) parse_fail(line_no, header[time_col], "not a number");
        if (!(obs.time > 0.0 && std::isfinite(obs.time))) parse_fail(line_no, header[time_col], "time must be positive");
        double event = 0.0;
        if (!parse_double(fields[event_col], event) || (event != 0.0 && event != 1.0)) {
            parse_fail(line_no, header[event_col], "event indicator must be 0 or 1");
        }
        obs.event = event == 1.0;
        obs.covariates.resize(static_cast<Eigen::Index>(feature_cols.size()));
        for (std::size_t k = 0; k < feature_cols.size(); ++k) {
            double v = 0.0;
            if (!parse_double(fields[feature_cols[k]], v) || !std::isfinite(v)) {
                parse_fail(line_no, header[feature_cols[k]], "not a finite number");
            }
            obs.covariates[static_cast<Eigen::Index>(k)] = v;
        }
        rows.push_back(std::move(obs));
    }
    if (stats) *stats = local;
    if (rows.empty()) {
        fail(ErrorKind::EmptyAfterFiltering, "no complete rows (" + std::to_string(local.rows_dropped) + " dropped)");
    }
    return SurvivalDataset::from_observations(rows, std::move(feature_names));
}

SurvivalDataset load_csv(const std::filesystem::path& path, const DatasetSchema& schema, LoadStats* stats) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
    return parse_csv(in, schema, stats);
}

void write_csv(const SurvivalDataset& data, std::ostream& out) {
    out << "time,status";
    for (const auto& name : data.feature_names()) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < data.n(); ++i) {
        out << format_exact(data.time(i)) << ',' << (data.event(i) ? 1 : 0);
        for (std::size_t j = 0; j < data.p(); ++j) {
            out << ',' << format_exact(data.covariates()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        out << '\n';
    }
}

void write_csv(const SurvivalDataset& data, const std::filesystem::path& path) {
    write_atomically(path, [&](std::ostream& out) { write_csv(data, out); });
}

std::uint64_t dataset_hash(const SurvivalDataset& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto feed = [&h](const void* bytes, std::size_t size) {
        const auto* b = static_cast<const unsigned char*>(bytes);
        for (std::size_t i = 0; i < size; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ULL;
        }
    };
    const std::uint64_t dims[2] = {data.n(), data.p()};
    feed(dims, sizeof dims);
    for (const auto& name : data.feature_names()) feed(name.c_str(), name.size() + 1);
    feed(data.times().data(), sizeof(double) * data.n());
    feed(data.events().data(), data.events().size());
    feed(data.covariates().data(), sizeof(double) * static_cast<std::size_t>(data.covariates().size()));
    return h;
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n < 2) fail(ErrorKind::InvalidArgument, "synthetic n must be at least 2");
    if (spec.true_beta.size() == 0) fail(ErrorKind::InvalidArgument, "true_beta must have at least one coefficient");
    if (!spec.true_beta.allFinite()) fail(ErrorKind::InvalidArgument, "true_beta must be finite");
    if (!(spec.censoring_rate_target >= 0.0 && spec.censoring_rate_target < 1.0)) {
        fail(ErrorKind::InvalidArgument, "censoring target must lie in [0, 1)");
    }
    const Baseline& base = spec.baseline;
    if (base.kind == Baseline::Kind::Exponential ? !(base.rate > 0.0) : !(base.shape > 0.0 && base.scale > 0.0)) {
        fail(ErrorKind::InvalidArgument, "baseline parameters must be positive");
    }

    const auto n = static_cast<Eigen::Index>(spec.n);
    const auto p = spec.true_beta.size();
    Rng rng(spec.seed);

    Matrix x(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) x(i, j) = rng.standard_normal();
    }

    SyntheticDataset out;
    out.true_beta = spec.true_beta;
    out.linear_predictor = x * spec.true_beta;
    out.event_times.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        // Invert the cumulative hazard H0(t) * exp(eta) at a unit exponential.
        const double h = rng.standard_exponential() / std::exp(out.linear_predictor[i]);
        const double t = base.kind == Baseline::Kind::Exponential ? h / base.rate
                                                                  : base.scale * std::pow(h, 1.0 / base.shape);
        if (!(t > 0.0 && std::isfinite(t))) {
            fail(ErrorKind::CalibrationFailed, "generated failure time is not a positive finite number");
        }
        out.event_times[i] = t;
    }

    out.censoring_times = Vector::Constant(n, std::numeric_limits<double>::infinity());
    if (spec.censoring_rate_target > 0.0) {
        const auto expected_censored = [&](double rate) {
            return (1.0 - (-rate * out.event_times.array()).exp()).mean();
        };
        double lo = 0.0;
        double hi = 1.0 / out.event_times.mean();
        int expansions = 0;
        while (expected_censored(hi) < spec.censoring_rate_target) {
            hi *= 2.0;
            if (++expansions > 400 || !std::isfinite(hi)) {
                fail(ErrorKind::CalibrationFailed, "cannot bracket the censoring rate");
            }
        }
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (expected_censored(mid) < spec.censoring_rate_target ? lo : hi) = mid;
        }
        out.censoring_rate = 0.5 * (lo + hi);
        if (!(out.censoring_rate > 0.0)) fail(ErrorKind::CalibrationFailed, "calibrated censoring rate is zero");
        for (Eigen::Index i = 0; i < n; ++i) out.censoring_times[i] = rng.standard_exponential() / out.censoring_rate;
    }

    Vector times(n);
    std::vector<std::uint8_t> events(spec.n);
    std::size_t censored = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool event = out.event_times[i] <= out.censoring_times[i];
        times[i] = event ? out.event_times[i] : out.censoring_times[i];
        events[static_cast<std::size_t>(i)] = event ? 1 : 0;
        censored += event ? 0 : 1;
    }
    out.realized_censoring = static_cast<double>(censored) / static_cast<double>(spec.n);
    out.data = SurvivalDataset(std::move(x), std::move(times), std::move(events));
    return out;
}

void write_ground_truth(const SyntheticDataset& synthetic, const SyntheticSpec& spec,
                        const std::filesystem::path& path) {
    using nlohmann::json;
    const auto to_array = [](const Vector& v) {
        json a = json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (std::isfinite(v[i])) a.push_back(v[i]);
            else a.push_back(nullptr);
        }
        return a;
    };
    json j;
    j["seed"] = spec.seed;
    j["n"] = spec.n;
    j["feature_names"] = synthetic.data.feature_names();
    j["true_beta"] = to_array(synthetic.true_beta);
    if (spec.baseline.kind == Baseline::Kind::Exponential) {
        j["baseline"] = {{"kind", "exponential"}, {"rate", spec.baseline.rate}};
    } else {
        j["baseline"] = {{"kind", "weibull"}, {"shape", spec.baseline.shape}, {"scale", spec.baseline.scale}};
    }
    j["censoring_rate_target"] = spec.censoring_rate_target;
    j["censoring_rate"] = synthetic.censoring_rate;
    j["realized_censoring"] = synthetic.realized_censoring;
    j["event_times"] = to_array(synthetic.event_times);
    j["censoring_times"] = to_array(synthetic.censoring_times);
    write_atomically(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

RunMetadata make_run_metadata(const SurvivalDataset& data, const ProtocolConfig& protocol, std::string source) {
    RunMetadata meta;
    meta.dataset_source = std::move(source);
    meta.n = data.n();
    meta.p = data.p();
    meta.events = data.event_count();
    meta.dataset_hash = dataset_hash(data);
    meta.protocol = protocol;
    return meta;
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", value);
    return buf;
}

void write_curves_csv(const LearningCurve& curve, std::ostream& out) {
    out << "algorithm,train_size,expected_error,variance,bias_plus_noise,performance,fit_failures\n";
    for (const auto& point : curve.points) {
        out << point.algorithm << ',' << point.train_size << ',' << format_number(point.report.expected_error) << ','
            << format_number(point.report.variance) << ',' << format_number(point.report.bias_plus_noise) << ','
            << format_number(point.report.performance) << ',' << point.fit_failures << '\n';
    }
}

namespace {

nlohmann::json metadata_json(const LearningCurve& curve, const RunMetadata& meta) {
    using nlohmann::json;
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(meta.dataset_hash));

    json algorithms = json::array();
    for (const auto& a : meta.protocol.algorithms) {
        json entry{{"name", a.name}};
        switch (a.kind) {
            case Algorithm::Kind::CoxPh:
                entry["kind"] = "coxph";
                entry["max_iterations"] = a.fit.max_iterations;
                entry["tolerance"] = a.fit.tolerance;
                break;
            case Algorithm::Kind::CoxPath:
                entry["kind"] = "coxpath";
                entry["selection"] = a.path.selection.name();
                if (a.path.selection.kind == Selection::Kind::FixedLambda) {
                    entry["fixed_lambda"] = a.path.selection.fixed_lambda;
                } else {
                    entry["folds"] = a.path.folds;
                }
                entry["n_lambda"] = a.path.n_lambda;
                entry["lambda_min_ratio"] =
                    a.path.lambda_min_ratio ? json(*a.path.lambda_min_ratio) : json("auto: 0.01 if n > p else 0.05");
                entry["cd_tolerance"] = a.path.cd_tolerance;
                entry["cv_seed"] = a.path.seed;
                break;
            case Algorithm::Kind::Custom:
                entry["kind"] = "custom";
                break;
        }
        algorithms.push_back(std::move(entry));
    }

    json cells = json::array();
    for (const auto& point : curve.points) {
        cells.push_back({{"algorithm", point.algorithm},
                         {"train_size", point.train_size},
                         {"attempted_fits", point.attempted_fits},
                         {"fit_failures", point.fit_failures},
                         {"repetitions_used", point.repetitions_used}});
    }

    const auto& pc = meta.protocol;
    return json{
        {"format_version", 1},
        {"master_seed", pc.master_seed},
        {"dataset",
         {{"source", meta.dataset_source}, {"n", meta.n}, {"p", meta.p}, {"events", meta.events}, {"hash", hash}}},
        {"protocol",
         {{"test_fraction", pc.test_fraction},
          {"replicates_per_size", pc.replicates_per_size},
          {"repetitions", pc.repetitions},
          {"training_sizes", pc.training_sizes},
          {"min_training_events", pc.min_training_events},
          {"max_redraws", pc.max_redraws},
          {"training_subsets", "drawn without replacement from the non-test pool; independent across replicates, "
                               "so subsets may overlap"}}},
        {"algorithms", algorithms},
        {"cells", cells},
        {"redraws", curve.redraws},
        {"curves_columns",
         {"algorithm", "train_size", "expected_error", "variance", "bias_plus_noise", "performance", "fit_failures"}},
    };
}

}  // namespace

void write_curves(const LearningCurve& curve, const RunMetadata& meta, const std::filesystem::path& out_dir) {
    if (curve.points.empty()) fail(ErrorKind::EmptyInput, "learning curve is empty");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) fail(ErrorKind::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

    const auto curves_path = out_dir / "curves.csv";
    const auto meta_path = out_dir / "run_meta.json";
    write_atomically(curves_path, [&](std::ostream& out) { write_curves_csv(curve, out); });
    try {
        write_atomically(meta_path, [&](std::ostream& out) { out << metadata_json(curve, meta).dump(2) << '\n'; });
    } catch (...) {
        std::filesystem::remove(curves_path, ec);
        throw;
    }
}

std::vector<CurveRow> read_curves_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::ParseError, "curves file is empty");
    if (trim(line) != "algorithm,train_size,expected_error,variance,bias_plus_noise,performance,fit_failures") {
        fail(ErrorKind::SchemaError, "unexpected curves header");
    }
    std::vector<CurveRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != 7) fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected 7 fields");
        CurveRow row;
        row.algorithm = std::string(f[0]);
        double size = 0, failures = 0;
        const bool ok = parse_double(f[1], size) && parse_double(f[2], row.expected_error) &&
                        parse_double(f[3], row.variance) && parse_double(f[4], row.bias_plus_noise) &&
                        parse_double(f[5], row.performance) && parse_double(f[6], failures);
        if (!ok) fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": malformed number");
        row.train_size = static_cast<std::size_t>(size);
        row.fit_failures = static_cast<std::size_t>(failures);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace survbv
