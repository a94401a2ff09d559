#pragma once

#include "critforms/common.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace critforms {

/// Flat key -> value map ("section.key" for TOML tables). Values: bool,
/// integer, float, string, or homogeneous arrays of numbers/strings.
using ConfigValue = std::variant<bool, std::int64_t, double, std::string,
                                 std::vector<double>, std::vector<std::string>>;
using ConfigTree = std::map<std::string, ConfigValue>;

/// Minimal TOML subset: comments, [tables], key = value with strings,
/// numbers, booleans and one-level arrays.
ConfigTree parse_toml(const std::string& text);
ConfigTree parse_json_config(const std::string& text);
/// Dispatch on leading '{' (JSON) vs TOML.
ConfigTree parse_config(const std::string& text);

/// Resolved run configuration for the CLI driver.
struct RunConfig {
    std::string task;

    // recipe
    std::string kind = "stable";  // "stable" | "diffusion"
    int d = 2;
    double alpha = 1.0;
    double delta = 0.0;
    double grid_h = 0.25;
    double box_radius = 8.0;
    bool transformed = false;
    double p = 1.0;
    double x_lo = 1e-3, x_hi = 1e3;
    std::int64_t n_nodes = 200;
    double mu_exponent = 1.5;

    // run controls
    double tol = 1e-8;
    std::vector<double> levels;        // stable exhaustion radii
    std::vector<double> level_counts;  // diffusion prefix sizes
    double core_radius = 1.5;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::int64_t n_paths = 10000;
    double time_horizon = 1.0;
    double dt = 0.0;  // 0 -> 1e-3 * t
    double potential_cap = 8.0;
    std::int64_t threads = 0;

    // sweep
    double delta_min = 0.0, delta_max = -1.0;
    std::int64_t delta_count = 21;

    static RunConfig from_tree(const ConfigTree& tree);
    static RunConfig from_text(const std::string& text);
    static RunConfig from_file(const std::string& path);

    /// Canonical JSON of every resolved field (sorted keys); feeding it back
    /// through from_text is the identity.
    std::string canonical_json() const;

    void validate() const;
};

}  // namespace critforms
