#pragma once

#include "invmeas/examples.hpp"
#include "invmeas/sde.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace invmeas {

/// Every tunable of a run. Defaults are deterministic; the seed has none.
struct RunConfig {
    // example.*
    std::string example = "identity";
    ExampleParams params;

    // mesh.*
    double h = 0.05;
    double r_obs = 1.0;
    std::vector<int> schedule{2, 3, 4, 5};
    double eps = 1e-2;

    // sde.*
    double dt = 1e-3;
    double T = 1.0;
    int paths = 1000;
    std::optional<std::uint64_t> seed;
    double stop_radius = 1e3;
    /// Unset means: on exactly when the coefficient set declares singularities.
    std::optional<bool> taming;
    DriftMode drift = DriftMode::G;
    std::string starts = "points:0,0";
    std::vector<double> ball_radii;
    int record_every = 0;
    bool trajectories = false;

    // verify.*
    int bumps = 10;
    std::uint64_t bump_seed = 1;
    double tolerance = 1e-2;
    double adjoint_tolerance = 1e-3;
    /// "fem" builds the density; "reference" uses the closed form when registered.
    std::string density = "fem";

    // estimators.*
    std::string grid = "ball:1:9";
    std::vector<double> times{1.0};
    std::vector<double> alphas{1.0};
    double r_exponent = 2.0;
    std::string g = "ball:0,0:0.5:0.1";
    std::string f = "bump:0,0:0.5";
    std::string set = "0,0:1";
    double N0 = 2.0;
    double C = 0.5;
    double T_cut = 10.0;
    double truncation_tol = 1e-3;
    double norm_mesh_h = 0.05;

    // run.*
    unsigned workers = 0;
    std::string output = "out";
};

/// Sets one `section.key` from its textual value; line is reported in errors.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value, int line = 0);

/// Parses the line-oriented format: `section.key = value`, `#` comments,
/// comma-separated lists. Unknown keys, bad values and a missing sde.seed
/// raise ConfigError with the offending line number. keys_set, when given,
/// receives the keys assigned by the text in order.
RunConfig parse_config(const std::string& text, std::vector<std::string>* keys_set = nullptr);

/// All keys with their current values, in a fixed order, for manifests.
std::vector<std::pair<std::string, std::string>> describe_config(const RunConfig& config);

std::vector<std::string> config_keys();

} // namespace invmeas
