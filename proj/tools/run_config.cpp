#include "run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace survbv::cli {

namespace {

void require_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
    if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& where) {
    if (!node.IsScalar()) throw ConfigError(where + ": expected a scalar");
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where + ": cannot read '" + node.Scalar() + "'");
    }
}

template <typename T>
void read_if(const YAML::Node& map, const char* key, const std::string& where, T& out) {
    if (const auto node = map[key]) out = scalar<T>(node, where + "." + key);
}

std::size_t count(const YAML::Node& node, const std::string& where) {
    const auto v = scalar<long long>(node, where);
    if (v < 0) throw ConfigError(where + ": must be non-negative");
    return static_cast<std::size_t>(v);
}

template <typename T>
std::vector<T> sequence(const YAML::Node& node, const std::string& where) {
    if (!node.IsSequence()) throw ConfigError(where + ": expected a list");
    std::vector<T> out;
    for (std::size_t i = 0; i < node.size(); ++i) out.push_back(scalar<T>(node[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

Selection parse_selection(const std::string& name, const std::string& where) {
    if (name == "cv_deviance") return Selection::cv_deviance();
    if (name == "cv_cindex") return Selection::cv_cindex();
    if (name == "fixed_lambda") return Selection::fixed(1.0);
    throw ConfigError(where + ": selection must be cv_deviance, cv_cindex or fixed_lambda");
}

Algorithm parse_algorithm(const YAML::Node& node, const std::string& where) {
    if (!node.IsMap() || !node["kind"]) throw ConfigError(where + ": expected a mapping with 'kind'");
    const auto kind = scalar<std::string>(node["kind"], where + ".kind");
    Algorithm algorithm;
    if (kind == "coxph") {
        require_keys(node, where, {"kind", "name", "max_iterations", "tolerance", "ridge_fallback"});
        algorithm = Algorithm::cox_ph();
        read_if(node, "max_iterations", where, algorithm.fit.max_iterations);
        read_if(node, "tolerance", where, algorithm.fit.tolerance);
        read_if(node, "ridge_fallback", where, algorithm.fit.ridge_fallback);
        try {
            algorithm.fit.validate();
        } catch (const Error& e) {
            throw ConfigError(where + ": " + e.what());
        }
    } else if (kind == "coxpath") {
        require_keys(node, where,
                     {"kind", "name", "selection", "fixed_lambda", "folds", "n_lambda", "lambda_min_ratio",
                      "cd_tolerance", "cd_max_passes", "seed"});
        algorithm = Algorithm::cox_path();
        auto& pc = algorithm.path;
        if (const auto s = node["selection"]) pc.selection = parse_selection(scalar<std::string>(s, where + ".selection"), where);
        if (const auto f = node["fixed_lambda"]) {
            if (pc.selection.kind != Selection::Kind::FixedLambda) {
                throw ConfigError(where + ": fixed_lambda requires selection: fixed_lambda");
            }
            pc.selection.fixed_lambda = scalar<double>(f, where + ".fixed_lambda");
        } else if (pc.selection.kind == Selection::Kind::FixedLambda) {
            throw ConfigError(where + ": selection fixed_lambda needs a fixed_lambda value");
        }
        if (const auto f = node["folds"]) pc.folds = count(f, where + ".folds");
        if (const auto f = node["n_lambda"]) pc.n_lambda = count(f, where + ".n_lambda");
        if (const auto f = node["lambda_min_ratio"]) pc.lambda_min_ratio = scalar<double>(f, where + ".lambda_min_ratio");
        read_if(node, "cd_tolerance", where, pc.cd_tolerance);
        if (const auto f = node["cd_max_passes"]) pc.cd_max_passes = count(f, where + ".cd_max_passes");
        read_if(node, "seed", where, pc.seed);
        try {
            pc.validate();
        } catch (const Error& e) {
            throw ConfigError(where + ": " + e.what());
        }
    } else {
        throw ConfigError(where + ".kind: expected coxph or coxpath, got '" + kind + "'");
    }
    read_if(node, "name", where, algorithm.name);
    return algorithm;
}

SyntheticSpec parse_synthetic(const YAML::Node& node, const std::string& where) {
    require_keys(node, where, {"n", "beta", "censoring", "baseline", "rate", "shape", "scale", "seed"});
    SyntheticSpec spec;
    if (!node["n"] || !node["beta"]) throw ConfigError(where + ": 'n' and 'beta' are required");
    spec.n = count(node["n"], where + ".n");
    const auto beta = sequence<double>(node["beta"], where + ".beta");
    spec.true_beta = Eigen::Map<const Vector>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    read_if(node, "censoring", where, spec.censoring_rate_target);
    read_if(node, "seed", where, spec.seed);
    std::string baseline = "exponential";
    read_if(node, "baseline", where, baseline);
    if (baseline == "exponential") {
        double rate = 1.0;
        read_if(node, "rate", where, rate);
        spec.baseline = Baseline::exponential(rate);
    } else if (baseline == "weibull") {
        double shape = 1.0, scale = 1.0;
        read_if(node, "shape", where, shape);
        read_if(node, "scale", where, scale);
        spec.baseline = Baseline::weibull(shape, scale);
    } else {
        throw ConfigError(where + ".baseline: expected exponential or weibull");
    }
    return spec;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("invalid YAML: ") + e.what());
    }
    require_keys(root, "config", {"dataset", "protocol", "algorithms", "output_dir"});
    for (const char* key : {"dataset", "protocol", "algorithms"}) {
        if (!root[key]) throw ConfigError(std::string("config: missing '") + key + "'");
    }

    RunConfig config;
    const auto dataset = root["dataset"];
    require_keys(dataset, "dataset", {"path", "time_column", "event_column", "features", "synthetic"});
    if (static_cast<bool>(dataset["path"]) == static_cast<bool>(dataset["synthetic"])) {
        throw ConfigError("dataset: exactly one of 'path' or 'synthetic' is required");
    }
    if (const auto path = dataset["path"]) {
        config.dataset_path = scalar<std::string>(path, "dataset.path");
        if (config.dataset_path.is_relative()) config.dataset_path = base_dir / config.dataset_path;
    } else {
        config.synthetic = parse_synthetic(dataset["synthetic"], "dataset.synthetic");
    }
    read_if(dataset, "time_column", "dataset", config.schema.time_column);
    read_if(dataset, "event_column", "dataset", config.schema.event_column);
    if (const auto f = dataset["features"]) config.schema.feature_columns = sequence<std::string>(f, "dataset.features");

    const auto protocol = root["protocol"];
    require_keys(protocol, "protocol",
                 {"test_fraction", "replicates_per_size", "repetitions", "training_sizes", "master_seed",
                  "min_training_events", "max_redraws"});
    auto& pc = config.protocol;
    read_if(protocol, "test_fraction", "protocol", pc.test_fraction);
    if (const auto v = protocol["replicates_per_size"]) pc.replicates_per_size = count(v, "protocol.replicates_per_size");
    if (const auto v = protocol["repetitions"]) pc.repetitions = count(v, "protocol.repetitions");
    if (const auto v = protocol["min_training_events"]) pc.min_training_events = count(v, "protocol.min_training_events");
    if (const auto v = protocol["max_redraws"]) pc.max_redraws = count(v, "protocol.max_redraws");
    read_if(protocol, "master_seed", "protocol", pc.master_seed);
    if (!protocol["training_sizes"]) throw ConfigError("protocol: 'training_sizes' is required");
    for (long long s : sequence<long long>(protocol["training_sizes"], "protocol.training_sizes")) {
        if (s < 2) throw ConfigError("protocol.training_sizes: sizes must be at least 2");
        pc.training_sizes.push_back(static_cast<std::size_t>(s));
    }

    const auto algorithms = root["algorithms"];
    if (!algorithms.IsSequence() || algorithms.size() == 0) throw ConfigError("algorithms: expected a non-empty list");
    for (std::size_t i = 0; i < algorithms.size(); ++i) {
        pc.algorithms.push_back(parse_algorithm(algorithms[i], "algorithms[" + std::to_string(i) + "]"));
    }

    if (const auto out = root["output_dir"]) {
        config.output_dir = scalar<std::string>(out, "output_dir");
        if (config.output_dir.is_relative()) config.output_dir = base_dir / config.output_dir;
    }
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config(buffer.str(), path.parent_path());
}

}  // namespace survbv::cli
