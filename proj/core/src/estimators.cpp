#include "invmeas/estimators.hpp"

#include "invmeas/error.hpp"
#include "invmeas/fem.hpp"

#include <boost/math/distributions/beta.hpp>

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

McEstimate summarize(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    if (xs.empty()) return {0.0, 0.0};
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / n;
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

// Per-start path samples laid out as [start][path].
using Samples = std::vector<std::vector<double>>;

Samples make_samples(std::size_t starts, int n_paths) {
    return Samples(starts, std::vector<double>(static_cast<std::size_t>(n_paths), 0.0));
}

std::vector<McEstimate> summarize_all(const Samples& s) {
    std::vector<McEstimate> out;
    out.reserve(s.size());
    for (const auto& v : s) out.push_back(summarize(v));
    return out;
}

double checked_value(const BoundedField& f, const Point& x, const char* who) {
    const double v = f.field(x);
    if (!std::isfinite(v) || std::abs(v) > f.bound * (1.0 + 1e-12))
        throw Error(std::string(who) + ": field '" + f.spec + "' is not bounded by its declared bound " +
                    std::to_string(f.bound) + " at " + describe(x) + " (value " + std::to_string(v) + ")");
    return v;
}

void require_positive(double v, const char* what, const char* who) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(std::string(who) + ": " + what + " must be positive");
}

} // namespace

KrylovReport krylov_check(const SdeProblem& problem, const BoundedField& g, const ScalarField& rho,
                          const std::vector<Point>& grid, double t, double r_exponent, const TriMesh& norm_mesh,
                          int n_paths, std::uint64_t seed) {
    require_positive(t, "t", "krylov_check");
    if (!(r_exponent >= 1.0)) throw Error("krylov_check: r exponent must be at least 1");
    const long n_steps = problem.steps_for(t);
    const double dt = problem.dt;
    const int dim = problem.cs.dim();

    auto g_at = [&](const Point& x) {
        const double v = checked_value(g, x, "krylov_check");
        if (v < 0.0) throw Error("krylov_check: g is negative at visited point " + describe(x));
        return v;
    };

    Samples samples = make_samples(grid.size(), n_paths);
    for_each_path(problem, grid, n_paths, seed, [&](std::size_t s, int p, PathStepper& path) {
        double acc = 0.5 * g_at(path.state());
        for (long k = 1; k <= n_steps; ++k) {
            path.step();
            const double v = path.absorbed() ? 0.0 : g_at(path.state());
            acc += k == n_steps ? 0.5 * v : v;
        }
        samples[s][static_cast<std::size_t>(p)] = acc * dt;
    });

    KrylovReport rep;
    rep.grid = grid;
    rep.t = t;
    rep.r_exponent = r_exponent;
    rep.estimates = summarize_all(samples);

    const bool sup_norm = std::isinf(r_exponent);
    double weighted = 0.0;
    double plain = 0.0;
    for_each_quad_point(norm_mesh, [&](const QuadPoint& q) {
        const Point x = embed(q.x, dim);
        const double a = std::abs(g.field(x));
        if (!std::isfinite(a)) throw QuadratureError("krylov_check: g is not finite at a quadrature node");
        if (sup_norm) {
            weighted = std::max(weighted, a);
            return;
        }
        const double ar = std::pow(a, r_exponent);
        weighted += q.weight * ar * rho(x);
        plain += q.weight * ar;
    });
    if (sup_norm) {
        rep.g_norm = rep.g_norm_lebesgue = weighted;
    } else {
        rep.g_norm = std::pow(weighted, 1.0 / r_exponent);
        rep.g_norm_lebesgue = std::pow(plain, 1.0 / r_exponent);
    }
    double best = 0.0;
    for (const auto& e : rep.estimates) best = std::max(best, e.mean);
    rep.ratio = rep.g_norm > 0.0 ? best / rep.g_norm : 0.0;
    return rep;
}

MomentReport moment_report(const PathBundle& bundle, const std::vector<double>& ts) {
    if (ts.empty()) throw Error("moment_report: empty time grid");
    std::vector<std::size_t> idx;
    for (double t : ts) {
        if (!(t > 0.0) || t > bundle.T * (1.0 + 1e-12))
            throw Error("moment_report: time " + std::to_string(t) + " outside (0, T]");
        const long i = bundle.record_index(t);
        if (i < 0) throw Error("moment_report: time " + std::to_string(t) + " is not on the bundle's record grid");
        idx.push_back(static_cast<std::size_t>(i));
    }

    MomentReport rep;
    rep.ts = ts;
    const int exploded = bundle.exploded_count();
    rep.contaminated = exploded > 0;
    rep.surviving_paths = static_cast<int>(bundle.paths.size()) - exploded;
    if (rep.contaminated)
        rep.warning = std::to_string(exploded) + " exploded paths excluded from the sup-moment statistics";

    rep.sup_moment.assign(ts.size(), {0.0, 0.0});
    for (std::size_t s = 0; s < bundle.starts.size(); ++s) {
        for (std::size_t k = 0; k < ts.size(); ++k) {
            std::vector<double> xs;
            for (int p = 0; p < bundle.n_paths; ++p) {
                const auto& rec = bundle.path(s, p);
                if (!rec.exploded) xs.push_back(rec.running_sup[idx[k]]);
            }
            const McEstimate e = summarize(xs);
            if (s == 0 || e.mean > rep.sup_moment[k].mean) rep.sup_moment[k] = e;
        }
    }
    for (std::size_t k = 1; k < ts.size(); ++k)
        if (ts[k] > ts[k - 1] && rep.sup_moment[k].mean < rep.sup_moment[k - 1].mean) rep.monotone = false;

    // least squares of log m against t over points with m > 0
    double st = 0, sy = 0, stt = 0, sty = 0, n = 0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double m = rep.sup_moment[k].mean;
        if (!(m > 0.0)) continue;
        const double y = std::log(m);
        st += ts[k];
        sy += y;
        stt += ts[k] * ts[k];
        sty += ts[k] * y;
        n += 1.0;
    }
    if (n >= 2.0 && n * stt - st * st > 0.0) {
        rep.C6 = (n * sty - st * sy) / (n * stt - st * st);
        rep.C5_fit = std::exp((sy - rep.C6 * st) / n);
    } else if (n >= 1.0) {
        rep.C6 = 0.0;
        rep.C5_fit = std::exp(sy / n);
    }
    rep.C5 = rep.C5_fit;
    for (std::size_t k = 0; k < ts.size(); ++k)
        rep.C5 = std::max(rep.C5, rep.sup_moment[k].mean * std::exp(-rep.C6 * ts[k]));
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double env = rep.C5 * std::exp(rep.C6 * ts[k]);
        if (rep.sup_moment[k].mean > env * (1.0 + 1e-12)) rep.envelope_dominates = false;
    }
    return rep;
}

GrowthReport growth_hypothesis_check(const CoefficientSet& cs, const ScalarField& h1, const ScalarField& h2,
                                     double C_const, const std::vector<Point>& grid) {
    GrowthReport rep;
    for (const auto& x : grid) {
        const double r = x.norm();
        const Matrix sigma = factor_sigma(cs.A()(x));
        const Point g = drift_G(cs, x, SingularPolicy::accept).value;
        const double sig_margin = std::abs(h1(x)) + C_const * (std::sqrt(r) + 1.0) - sigma.cwiseAbs().maxCoeff();
        const double h2x = std::abs(h2(x));
        const double g_max = g.cwiseAbs().maxCoeff();
        // an infinite drift at a declared singularity is admissible when h2 is infinite there too
        const double drift_margin =
            std::isinf(g_max) && std::isinf(h2x) ? 0.0 : h2x + C_const * (r + 1.0) - g_max;
        ++rep.points_checked;
        rep.worst_sigma_margin = std::min(rep.worst_sigma_margin, sig_margin);
        rep.worst_drift_margin = std::min(rep.worst_drift_margin, drift_margin);
        const double m = std::min(sig_margin, drift_margin);
        if (!(m >= 0.0)) {
            ++rep.violations;
            if (rep.offending.size() < 20) rep.offending.push_back({x, m});
        }
    }
    return rep;
}

NonexplosionReport nonexplosion_criterion(const CoefficientSet& cs, const std::vector<Point>& grid, double N0,
                                          double C_const) {
    NonexplosionReport rep;
    rep.worst_point = zero_point(cs.dim());
    for (const auto& x : grid) {
        const double r2 = x.squaredNorm();
        if (std::sqrt(r2) < N0) {
            ++rep.points_skipped;
            continue;
        }
        const Matrix a = cs.A()(x);
        const Point g = drift_G(cs, x, SingularPolicy::accept).value;
        const double lhs = -x.dot(a * x) / (r2 + 1.0) + 0.5 * a.trace() + g.dot(x);
        const double margin = -C_const * (r2 + 1.0) - lhs;
        ++rep.points_checked;
        if (!(margin >= rep.worst_margin)) {
            rep.worst_margin = margin;
            rep.worst_point = x;
        }
        if (!(margin >= 0.0)) {
            ++rep.violations;
            if (rep.offending.size() < 20) rep.offending.push_back({x, margin});
        }
    }
    return rep;
}

SemigroupReport semigroup_mc(const SdeProblem& problem, const BoundedField& f, double t,
                             const std::vector<Point>& xs, int n_paths, std::uint64_t seed,
                             std::optional<double> f_mass) {
    require_positive(t, "t", "semigroup_mc");
    const long n_steps = problem.steps_for(t);
    Samples samples = make_samples(xs.size(), n_paths);
    std::vector<std::vector<char>> absorbed(xs.size(), std::vector<char>(static_cast<std::size_t>(n_paths), 0));
    for_each_path(problem, xs, n_paths, seed, [&](std::size_t s, int p, PathStepper& path) {
        for (long k = 0; k < n_steps; ++k) path.step();
        const auto slot = static_cast<std::size_t>(p);
        absorbed[s][slot] = path.absorbed();
        samples[s][slot] = path.absorbed() ? 0.0 : checked_value(f, path.state(), "semigroup_mc");
    });

    SemigroupReport rep;
    rep.points = xs;
    rep.t = t;
    rep.estimates = summarize_all(samples);
    for (const auto& a : absorbed) rep.absorbed.push_back(static_cast<int>(std::count(a.begin(), a.end(), 1)));
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = i + 1; j < xs.size(); ++j) {
            const double dist = (xs[i] - xs[j]).norm();
            if (dist > 0.0)
                rep.modulus.push_back(
                    {i, j, std::abs(rep.estimates[i].mean - rep.estimates[j].mean) / std::pow(dist, rep.gamma)});
        }
    const bool all_zero = std::all_of(rep.estimates.begin(), rep.estimates.end(),
                                      [](const McEstimate& e) { return e.mean == 0.0; });
    rep.suspicious = all_zero && f_mass && *f_mass > 0.0;
    return rep;
}

std::pair<double, double> clopper_pearson(int hits, int n, double confidence) {
    if (n <= 0 || hits < 0 || hits > n) throw Error("clopper_pearson: need 0 <= hits <= n and n > 0");
    if (!(confidence > 0.0 && confidence < 1.0)) throw Error("clopper_pearson: confidence must lie in (0, 1)");
    const double tail = 0.5 * (1.0 - confidence);
    const double lo =
        hits == 0 ? 0.0 : boost::math::quantile(boost::math::beta_distribution<>(hits, n - hits + 1), tail);
    const double hi =
        hits == n ? 1.0 : boost::math::quantile(boost::math::beta_distribution<>(hits + 1, n - hits), 1.0 - tail);
    return {lo, hi};
}

IrreducibilityReport irreducibility_probe(const SdeProblem& problem, const BallSet& set, double t,
                                          const std::vector<Point>& xs, int n_paths, std::uint64_t seed,
                                          double confidence) {
    require_positive(t, "t", "irreducibility_probe");
    require_positive(set.radius, "set radius", "irreducibility_probe");
    if (set.center.size() != problem.cs.dim()) throw Error("irreducibility_probe: set centre has the wrong dimension");
    const long n_steps = problem.steps_for(t);
    std::vector<std::vector<char>> hit(xs.size(), std::vector<char>(static_cast<std::size_t>(n_paths), 0));
    for_each_path(problem, xs, n_paths, seed, [&](std::size_t s, int p, PathStepper& path) {
        for (long k = 0; k < n_steps; ++k) path.step();
        hit[s][static_cast<std::size_t>(p)] =
            !path.absorbed() && (path.state() - set.center).norm() < set.radius ? 1 : 0;
    });
    IrreducibilityReport rep;
    rep.points = xs;
    rep.t = t;
    rep.confidence = confidence;
    for (const auto& h : hit) {
        HitEstimate c;
        c.n = n_paths;
        c.hits = static_cast<int>(std::count(h.begin(), h.end(), 1));
        c.estimate = static_cast<double>(c.hits) / c.n;
        std::tie(c.lower, c.upper) = clopper_pearson(c.hits, c.n, confidence);
        rep.cells.push_back(c);
    }
    return rep;
}

ResolventReport resolvent_mc(const SdeProblem& problem, const BoundedField& g, double alpha,
                             const std::vector<Point>& xs, double T_cut, int n_paths, std::uint64_t seed,
                             double truncation_tol) {
    require_positive(alpha, "alpha", "resolvent_mc");
    require_positive(T_cut, "T_cut", "resolvent_mc");
    require_positive(truncation_tol, "truncation tolerance", "resolvent_mc");
    const double bound = std::exp(-alpha * T_cut) * g.bound / alpha;
    if (bound > truncation_tol) {
        const double needed = std::log(g.bound / (alpha * truncation_tol)) / alpha;
        std::ostringstream os;
        os << "resolvent_mc: truncation bound " << bound << " exceeds tolerance " << truncation_tol
           << "; T_cut must be at least " << needed;
        throw Error(os.str());
    }
    const long n_steps = problem.steps_for(T_cut);
    const double dt = problem.dt;
    Samples samples = make_samples(xs.size(), n_paths);
    for_each_path(problem, xs, n_paths, seed, [&](std::size_t s, int p, PathStepper& path) {
        double acc = 0.5 * checked_value(g, path.state(), "resolvent_mc");
        for (long k = 1; k <= n_steps; ++k) {
            path.step();
            const double v = path.absorbed() ? 0.0 : checked_value(g, path.state(), "resolvent_mc");
            const double w = std::exp(-alpha * static_cast<double>(k) * dt);
            acc += (k == n_steps ? 0.5 : 1.0) * w * v;
        }
        samples[s][static_cast<std::size_t>(p)] = acc * dt;
    });
    ResolventReport rep;
    rep.points = xs;
    rep.alpha = alpha;
    rep.T_cut = T_cut;
    rep.estimates = summarize_all(samples);
    rep.truncation_bound = bound;
    return rep;
}

SubinvarianceReport subinvariance_check(const SdeProblem& problem, const ScalarField& rho, const BoundedField& f,
                                        double t, const TriMesh& mesh, int n_paths, std::uint64_t seed) {
    require_positive(t, "t", "subinvariance_check");
    if (!f.nonnegative) throw Error("subinvariance_check: f must be non-negative");
    const int dim = problem.cs.dim();
    std::vector<Point> starts;
    std::vector<double> weights;
    for_each_quad_point(mesh, [&](const QuadPoint& q) {
        const Point x = embed(q.x, dim);
        starts.push_back(x);
        weights.push_back(q.weight * rho(x));
    });
    SubinvarianceReport rep;
    rep.t = t;
    rep.starts = starts.size();
    double rhs = 0.0;
    for (std::size_t i = 0; i < starts.size(); ++i) rhs += weights[i] * checked_value(f, starts[i], "subinvariance_check");
    rep.rhs = rhs;

    const auto sg = semigroup_mc(problem, f, t, starts, n_paths, seed);
    double lhs = 0.0;
    double var = 0.0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        lhs += weights[i] * sg.estimates[i].mean;
        var += weights[i] * weights[i] * sg.estimates[i].std_error * sg.estimates[i].std_error;
    }
    rep.lhs = lhs;
    rep.lhs_std_error = std::sqrt(var);
    rep.pass = rep.lhs <= rep.rhs + 3.0 * rep.lhs_std_error;
    rep.invariant = std::abs(rep.lhs - rep.rhs) <= 3.0 * rep.lhs_std_error;
    return rep;
}

} // namespace invmeas
