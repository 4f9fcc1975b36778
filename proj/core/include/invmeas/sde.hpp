#pragma once

#include "invmeas/coefficients.hpp"
#include "invmeas/random.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace invmeas {

enum class DriftMode { G, Ghat };

/// Euler-Maruyama discretization of dX = sigma(X) dW + b(X) dt with
/// A = sigma sigma^T (pointwise Cholesky) and b = G or Ghat.
struct SdeProblem {
    explicit SdeProblem(CoefficientSet coefficients) : cs(std::move(coefficients)) {}

    CoefficientSet cs;
    /// Needed for DriftMode::Ghat.
    std::optional<ScalarField> rho;
    DriftMode drift_mode = DriftMode::G;
    /// b_eff = b / (1 + dt |b|). Untamed steps refuse flagged singular drift values.
    bool taming = false;
    double dt = 1e-3;
    /// First exit of this ball stands in for explosion; the path is absorbed.
    double stop_radius = 1e3;
    /// Radii of the balls whose exit times are tracked; increasing.
    std::vector<double> ball_radii;
    /// Multiplies sigma. 0 turns the scheme into explicit Euler for the ODE.
    double noise_scale = 1.0;
    unsigned workers = 0;

    void validate() const;
    /// Number of steps covering [0, horizon]; horizon must be a multiple of dt.
    long steps_for(double horizon) const;
};

/// Lower-triangular sigma with sigma sigma^T = a and positive diagonal.
/// Throws CoefficientError naming the first non-positive leading minor.
Matrix factor_sigma(const Matrix& a);

/// Drift selected by the problem's mode, flagged inside declared singularities.
Flagged<Point> effective_drift(const SdeProblem& problem, const Point& x);

/// b / (1 + dt |b|); an infinite |b| maps to the unit direction over dt.
Point tame(const Point& b, double dt);

/// One Euler-Maruyama path with its own random stream keyed by
/// (seed, start index, path index).
class PathStepper {
public:
    PathStepper(const SdeProblem& problem, const Point& x0, std::uint64_t seed, std::uint32_t start_index,
                std::uint32_t path_index);

    /// Advances one step; a no-op after absorption.
    void step();

    const Point& state() const { return x_; }
    long steps() const { return k_; }
    double time() const { return static_cast<double>(k_) * problem_->dt; }
    bool absorbed() const { return absorbed_; }
    /// Time of absorption, +inf while alive.
    double absorption_time() const { return absorption_time_; }
    const std::string& diagnostic() const { return diagnostic_; }
    double running_sup() const { return sup_; }
    /// First exit time of each tracked ball, +inf if not yet exited.
    const std::vector<double>& exit_times() const { return exit_times_; }

private:
    void track_exits();

    const SdeProblem* problem_;
    RandomStream rng_;
    Point x_;
    long k_ = 0;
    bool absorbed_ = false;
    double absorption_time_ = std::numeric_limits<double>::infinity();
    std::string diagnostic_;
    double sup_;
    std::vector<double> exit_times_;
};

/// Calls fn(start, path, stepper) for every (start, path) pair, possibly in
/// parallel; fn must write only to slots owned by that pair.
void for_each_path(const SdeProblem& problem, const std::vector<Point>& starts, int n_paths, std::uint64_t seed,
                   const std::function<void(std::size_t, int, PathStepper&)>& fn);

struct PathRecord {
    /// Row-major records x dim states sampled on the bundle's record grid;
    /// frozen after absorption.
    std::vector<double> states;
    /// sup_{s <= t} |X_s| over all steps up to each record time.
    std::vector<double> running_sup;
    std::vector<double> exit_times;
    bool exploded = false;
    double explosion_time = std::numeric_limits<double>::infinity();
    std::string diagnostic;
};

struct PathBundle {
    std::vector<Point> starts;
    int n_paths = 0;
    std::uint64_t seed = 0;
    double dt = 0.0;
    double T = 0.0;
    int dim = 0;
    int record_every = 1;
    std::vector<double> record_times;
    std::vector<double> ball_radii;
    double stop_radius = 0.0;
    /// Ordered by (start index, path index).
    std::vector<PathRecord> paths;

    const PathRecord& path(std::size_t start, int p) const {
        return paths[start * static_cast<std::size_t>(n_paths) + static_cast<std::size_t>(p)];
    }
    Point state(const PathRecord& r, std::size_t record) const;
    /// Index of the record at time t (to 1e-9 dt), or -1.
    long record_index(double t) const;
    int exploded_count() const;
};

struct SimulateOptions {
    /// Steps between stored records; 0 picks the smallest divisor of the step
    /// count giving at most 200 records.
    int record_every = 0;
};

PathBundle simulate(const SdeProblem& problem, const std::vector<Point>& starts, double T, int n_paths,
                    std::uint64_t seed, const SimulateOptions& options = {});

} // namespace invmeas
