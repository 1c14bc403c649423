#ifndef MLAS_CONFIG_HPP
#define MLAS_CONFIG_HPP

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlas/harness.hpp"
#include "mlas/likelihood.hpp"

namespace mlas {

/// Invalid or unreadable configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

nlohmann::json read_json_file(const std::filesystem::path& path);

/// Applies "a.b.c=value" to `doc`. The value is parsed as JSON when possible,
/// otherwise stored as a string. Intermediate objects are created as needed.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Builds and validates an experiment. Throws ConfigError on any problem.
ExperimentConfig experiment_from_json(const nlohmann::json& doc);
nlohmann::json experiment_to_json(const ExperimentConfig& config);

/// Reads `path`, applies `overrides` in order (last wins) and validates.
ExperimentConfig load_experiment(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

nlohmann::json pair_geometry_to_json(const RadarPairGeometry& pair);
RadarPairGeometry pair_geometry_from_json(const nlohmann::json& j);

/// Lossless serialization of the fusion payload of one radar pair.
nlohmann::json context_to_json(const PerPairContext& ctx);
PerPairContext context_from_json(const nlohmann::json& j);

}  // namespace mlas

#endif  // MLAS_CONFIG_HPP
