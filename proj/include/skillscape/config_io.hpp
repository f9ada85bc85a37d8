#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skillscape/datagen.hpp"
#include "skillscape/economy.hpp"
#include "skillscape/equilibrium.hpp"

namespace skillscape {

// Contents of a config file. Every top-level section is optional; commands
// check for the ones they need.
struct RunConfig {
    std::optional<EconomyConfig> economy;
    std::optional<CityPrimitives> cities;
    std::vector<std::string> city_labels;  // defaults to c000, c001, ...
    SolverSettings solver;
    std::optional<GeneratorSpec> generator;
};

// Throws ConfigError on malformed JSON, unknown keys, wrong types or shapes.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Canonical form: sorted keys, two-space indent, shortest round-trip floats,
// trailing newline.
std::string dump_config(const RunConfig& config);

// Fills the labels default for `n` cities.
std::vector<std::string> resolve_labels(const RunConfig& config, int n);

std::string dump_state_json(const EquilibriumState& state, const std::vector<std::string>& labels);

}  // namespace skillscape
