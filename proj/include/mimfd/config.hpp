#pragma once

// Run configuration: flat "key = value" text with '#' comments, and the
// registry of named coefficient/source presets.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mimfd/fem.hpp"
#include "mimfd/inversion.hpp"

namespace mimfd {

struct RunConfig {
    // model
    double alpha = 0.5;
    double q = 1.0;
    double final_time = 1.5;
    int steps = 20;
    int nx = 20;
    int ny = 20;
    Rectangle domain{};
    std::string diffusion = "identity";
    std::string reaction = "zero";
    std::string rho = "example1";
    std::string g_true = "example1";
    std::string initial = "zero";

    // observation and noise
    std::optional<std::pair<double, double>> frame = std::make_pair(0.1, 0.9);
    double noise = 0.0;
    std::uint64_t seed = 0;
    int refine = 1;

    // inversion
    double beta = 1e-5;
    bool beta_sweep = false;
    std::vector<double> sweep_values{1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3};
    std::optional<double> g_max;
    int max_iters = 100;
    double grad_tol = 1e-8;
    double armijo_c1 = 1e-4;
    double armijo_backtrack = 0.5;
    double armijo_initial_step = 1.0;
    int armijo_max_backtracks = 40;
    StepRule step_rule = StepRule::fixed;
    DirectionMode direction = DirectionMode::steepest_descent;
    double smoothing = 0.0;
    AdjointScheme adjoint = AdjointScheme::discrete;

    std::filesystem::path out = "out";

    // Throws ConfigError naming the offending key.
    void validate() const;

    bool operator==(const RunConfig&) const = default;
};

// Keys that must appear in every config file.
const std::vector<std::string>& required_keys();

// Throws ParseError (with line) on malformed lines, ConfigError on unknown,
// duplicate, missing or invalid keys.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Canonical text with every key; parse_config(to_text(c)) == c.
std::string to_text(const RunConfig& config);
void save_config(const std::filesystem::path& path, const RunConfig& config);

// Presets. Names are validated by RunConfig::validate.
std::function<double(double)> rho_preset(const std::string& name);
ScalarFunction field_preset(const std::string& name);  // g_true and initial
Coefficients coefficient_preset(const std::string& diffusion, const std::string& reaction);
const std::vector<std::string>& field_preset_names();

// Example 1: unit square, q = 1, alpha = 0.5, T = 1.5, 20^2 x 20, rho = 2 + (2 pi t)^2,
// g_true = cos(pi x) cos(pi y) / 2 + 1, observation frame [0.1, 0.9], 1% noise,
// with the reconstruction settings used for the reproduced tables.
RunConfig example1_config();

Scenario to_scenario(const RunConfig& config);
InverseConfig to_inverse_config(const RunConfig& config);

}  // namespace mimfd
