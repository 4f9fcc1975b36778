#include "invmeas/sde.hpp"

#include "invmeas/error.hpp"
#include "invmeas/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace invmeas {

namespace {

std::string describe(const Point& x) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
    os << ')';
    return os.str();
}

} // namespace

void SdeProblem::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("SdeProblem: dt must be positive");
    if (!(stop_radius > 0.0)) throw Error("SdeProblem: stop_radius must be positive");
    for (std::size_t i = 0; i < ball_radii.size(); ++i) {
        if (!(ball_radii[i] > 0.0)) throw Error("SdeProblem: ball radii must be positive");
        if (i > 0 && !(ball_radii[i] > ball_radii[i - 1]))
            throw Error("SdeProblem: ball radii must be strictly increasing");
    }
    if (!ball_radii.empty() && !(stop_radius > ball_radii.back()))
        throw Error("SdeProblem: stop_radius must exceed every tracked ball radius");
    if (!(noise_scale >= 0.0)) throw Error("SdeProblem: noise_scale must be non-negative");
    if (drift_mode == DriftMode::Ghat && !rho) throw Error("SdeProblem: drift mode Ghat needs a density");
}

long SdeProblem::steps_for(double horizon) const {
    if (!(horizon >= 0.0)) throw Error("SdeProblem: horizon must be non-negative");
    const double ratio = horizon / dt;
    const long n = std::lround(ratio);
    if (std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio)) {
        std::ostringstream os;
        os << "SdeProblem: horizon " << horizon << " is not a multiple of dt = " << dt;
        throw Error(os.str());
    }
    return n;
}

Matrix factor_sigma(const Matrix& a) {
    const Eigen::Index d = a.rows();
    if (a.cols() != d) throw CoefficientError("factor_sigma: matrix is not square");
    Matrix l = Matrix::Zero(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        double diag = a(j, j);
        for (Eigen::Index k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0))
            throw CoefficientError("factor_sigma: leading minor of order " + std::to_string(j + 1) +
                                   " is not positive (ellipticity violated)");
        l(j, j) = std::sqrt(diag);
        for (Eigen::Index i = j + 1; i < d; ++i) {
            double s = a(i, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

Flagged<Point> effective_drift(const SdeProblem& problem, const Point& x) {
    if (problem.drift_mode == DriftMode::G) return drift_G(problem.cs, x, SingularPolicy::accept);
    const auto d = derived_drifts(problem.cs, *problem.rho, x, SingularPolicy::accept);
    return {d.Ghat, d.singular};
}

Point tame(const Point& b, double dt) {
    const double n = b.norm();
    if (std::isfinite(n)) return b / (1.0 + dt * n);
    Point dir = Point::Zero(b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i)
        if (std::isinf(b(i))) dir(i) = b(i) > 0 ? 1.0 : -1.0;
    const double m = dir.norm();
    if (!(m > 0.0)) return Point::Constant(b.size(), std::nan(""));
    return dir / (m * dt);
}

PathStepper::PathStepper(const SdeProblem& problem, const Point& x0, std::uint64_t seed, std::uint32_t start_index,
                         std::uint32_t path_index)
    : problem_(&problem), rng_(seed, start_index, path_index), x_(x0), sup_(x0.norm()),
      exit_times_(problem.ball_radii.size(), std::numeric_limits<double>::infinity()) {
    if (x0.size() != problem.cs.dim()) throw Error("PathStepper: start point has the wrong dimension");
    if (!(x0.norm() < problem.stop_radius))
        throw Error("PathStepper: start " + describe(x0) + " lies outside the stop radius");
    track_exits();
}

void PathStepper::track_exits() {
    const double r = x_.norm();
    const double t = time();
    for (std::size_t i = 0; i < exit_times_.size(); ++i)
        if (std::isinf(exit_times_[i]) && r >= problem_->ball_radii[i]) exit_times_[i] = t;
}

void PathStepper::step() {
    if (absorbed_) return;
    const SdeProblem& p = *problem_;
    const int d = static_cast<int>(x_.size());
    Point dw(d);
    const double sqdt = std::sqrt(p.dt);
    for (int i = 0; i < d; ++i) dw(i) = sqdt * rng_.normal();

    auto drift = effective_drift(p, x_);
    if (drift.singular && !p.taming)
        throw CoefficientError("untamed step hit a declared drift singularity at " + describe(x_));
    const Point b = p.taming ? tame(drift.value, p.dt) : drift.value;
    Point next = x_ + b * p.dt;
    if (p.noise_scale != 0.0) next += p.noise_scale * (factor_sigma(p.cs.A()(x_)) * dw);

    const double t_next = static_cast<double>(k_ + 1) * p.dt;
    if (!next.allFinite()) {
        absorbed_ = true;
        absorption_time_ = t_next;
        diagnostic_ = "non-finite state after step from " + describe(x_) + " at t = " + std::to_string(t_next);
        sup_ = std::numeric_limits<double>::infinity();
        for (auto& e : exit_times_)
            if (std::isinf(e)) e = t_next;
        ++k_;
        return;
    }
    x_ = next;
    ++k_;
    const double r = x_.norm();
    sup_ = std::max(sup_, r);
    track_exits();
    if (r >= p.stop_radius) {
        absorbed_ = true;
        absorption_time_ = t_next;
        diagnostic_ = "left the stop radius at t = " + std::to_string(t_next);
    }
}

void for_each_path(const SdeProblem& problem, const std::vector<Point>& starts, int n_paths, std::uint64_t seed,
                   const std::function<void(std::size_t, int, PathStepper&)>& fn) {
    problem.validate();
    if (n_paths <= 0) throw Error("simulation: number of paths must be positive");
    const std::size_t n = static_cast<std::size_t>(n_paths);
    parallel_for(starts.size() * n, problem.workers, [&](std::size_t flat) {
        const std::size_t s = flat / n;
        const int p = static_cast<int>(flat % n);
        PathStepper stepper(problem, starts[s], seed, static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(p));
        fn(s, p, stepper);
    });
}

Point PathBundle::state(const PathRecord& r, std::size_t record) const {
    Point x(dim);
    for (int i = 0; i < dim; ++i) x(i) = r.states[record * static_cast<std::size_t>(dim) + static_cast<std::size_t>(i)];
    return x;
}

long PathBundle::record_index(double t) const {
    for (std::size_t i = 0; i < record_times.size(); ++i)
        if (std::abs(record_times[i] - t) <= 1e-9 * dt) return static_cast<long>(i);
    return -1;
}

int PathBundle::exploded_count() const {
    return static_cast<int>(std::count_if(paths.begin(), paths.end(), [](const PathRecord& r) { return r.exploded; }));
}

PathBundle simulate(const SdeProblem& problem, const std::vector<Point>& starts, double T, int n_paths,
                    std::uint64_t seed, const SimulateOptions& options) {
    problem.validate();
    if (!(T > 0.0)) throw Error("simulate: T must be positive");
    const long n_steps = problem.steps_for(T);
    long every = options.record_every;
    if (every < 0) throw Error("simulate: record_every must be non-negative");
    if (every == 0) {
        every = 1;
        while (n_steps / every > 200 || n_steps % every != 0) ++every;
    }
    if (n_steps % every != 0) throw Error("simulate: record_every must divide the number of steps");

    PathBundle bundle;
    bundle.starts = starts;
    bundle.n_paths = n_paths;
    bundle.seed = seed;
    bundle.dt = problem.dt;
    bundle.T = T;
    bundle.dim = problem.cs.dim();
    bundle.record_every = static_cast<int>(every);
    bundle.ball_radii = problem.ball_radii;
    bundle.stop_radius = problem.stop_radius;
    const long n_records = n_steps / every + 1;
    for (long r = 0; r < n_records; ++r)
        bundle.record_times.push_back(static_cast<double>(r * every) * problem.dt);
    bundle.paths.resize(starts.size() * static_cast<std::size_t>(std::max(n_paths, 0)));

    const int dim = bundle.dim;
    for_each_path(problem, starts, n_paths, seed, [&](std::size_t s, int p, PathStepper& stepper) {
        PathRecord& rec = bundle.paths[s * static_cast<std::size_t>(n_paths) + static_cast<std::size_t>(p)];
        rec.states.reserve(static_cast<std::size_t>(n_records * dim));
        rec.running_sup.reserve(static_cast<std::size_t>(n_records));
        auto store = [&] {
            for (int i = 0; i < dim; ++i) rec.states.push_back(stepper.state()(i));
            rec.running_sup.push_back(stepper.running_sup());
        };
        store();
        for (long k = 1; k <= n_steps; ++k) {
            stepper.step();
            if (k % every == 0) store();
        }
        rec.exit_times = stepper.exit_times();
        rec.exploded = stepper.absorbed();
        rec.explosion_time = stepper.absorption_time();
        rec.diagnostic = stepper.diagnostic();
    });
    return bundle;
}

} // namespace invmeas
