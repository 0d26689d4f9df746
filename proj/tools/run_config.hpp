#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "survbv/data_io.hpp"
#include "survbv/harness.hpp"

namespace survbv::cli {

/// Malformed or inconsistent configuration (exit code 1).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Contents of an experiment configuration file. Either `dataset_path` or
/// `synthetic` is set.
struct RunConfig {
    std::filesystem::path dataset_path;
    DatasetSchema schema;
    std::optional<SyntheticSpec> synthetic;
    ProtocolConfig protocol;
    std::filesystem::path output_dir;
};

/// Parses YAML text. Relative paths resolve against `base_dir`. Every key is
/// checked; unknown keys and wrong types raise ConfigError.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace survbv::cli
