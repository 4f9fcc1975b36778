#include "cli.hpp"

#include "invmeas/config.hpp"
#include "invmeas/csv.hpp"
#include "invmeas/density.hpp"
#include "invmeas/error.hpp"
#include "invmeas/estimators.hpp"
#include "invmeas/examples.hpp"
#include "invmeas/fem.hpp"
#include "invmeas/field_spec.hpp"
#include "invmeas/grid.hpp"
#include "invmeas/mesh.hpp"
#include "invmeas/sde.hpp"
#include "invmeas/strings.hpp"
#include "invmeas/test_function.hpp"
#include "invmeas/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace invmeas::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

struct Flag {
    const char* name;
    const char* key;
    const char* help;
};

const std::vector<Flag>& flags() {
    static const std::vector<Flag> all = {
        {"--example", "example.name", "registered coefficient set"},
        {"--dim", "example.dim", "state-space dimension"},
        {"--diffusion", "example.diffusion", "diffusion scale a"},
        {"--theta", "example.theta", "drift strength"},
        {"--h", "mesh.h", "target mesh edge length"},
        {"--r-obs", "mesh.r_obs", "observation disk radius"},
        {"--schedule", "mesh.schedule", "ball radii n, comma separated"},
        {"--eps", "mesh.eps", "Cauchy tolerance on the observation disk"},
        {"--dt", "sde.dt", "time step"},
        {"--T", "sde.T", "time horizon"},
        {"--paths", "sde.paths", "paths per start point"},
        {"--seed", "sde.seed", "random seed (required for Monte Carlo)"},
        {"--stop-radius", "sde.stop_radius", "explosion proxy radius"},
        {"--taming", "sde.taming", "true, false or auto"},
        {"--drift", "sde.drift", "G or Ghat"},
        {"--starts", "sde.starts", "start grid spec"},
        {"--ball-radii", "sde.ball_radii", "radii for exit-time tracking"},
        {"--record-every", "sde.record_every", "steps between stored records"},
        {"--trajectories", "sde.trajectories", "also write full trajectories"},
        {"--bumps", "verify.bumps", "number of random test bumps"},
        {"--bump-seed", "verify.bump_seed", "seed of the bump suite"},
        {"--tolerance", "verify.tolerance", "residual tolerance per unit C2 norm"},
        {"--adjoint-tolerance", "verify.adjoint_tolerance", "adjoint gap tolerance per unit C2 norms"},
        {"--density", "verify.density", "fem or reference"},
        {"--grid", "estimators.grid", "evaluation grid spec"},
        {"--t", "estimators.t", "evaluation times, comma separated"},
        {"--alpha", "estimators.alpha", "resolvent parameters, comma separated"},
        {"--r-exponent", "estimators.r_exponent", "integrability exponent r (inf allowed)"},
        {"--g", "estimators.g", "field spec for g"},
        {"--f", "estimators.f", "field spec for f"},
        {"--set", "estimators.set", "target ball cx,cy:r"},
        {"--N0", "estimators.N0", "inner radius of the non-explosion check"},
        {"--C", "estimators.C", "constant of the criterion"},
        {"--T-cut", "estimators.T_cut", "resolvent time cut-off"},
        {"--truncation-tol", "estimators.truncation_tol", "resolvent truncation tolerance"},
        {"--norm-mesh-h", "estimators.norm_mesh_h", "mesh size for norms of g"},
        {"--workers", "run.workers", "worker threads (0 = all cores)"},
        {"--output", "run.output", "output directory"},
    };
    return all;
}

// ------------------------------------------------------------------ context

class Context {
public:
    Context(std::string subcommand, RunConfig config, std::set<std::string> explicit_keys, std::ostream& out)
        : subcommand_(std::move(subcommand)), config_(std::move(config)), explicit_(std::move(explicit_keys)),
          out_(out) {
        dir_ = config_.output;
        fs::create_directories(dir_);
        log_.open(dir_ / "run.log", std::ios::app);
        log("start " + subcommand_);
    }

    const RunConfig& config() const { return config_; }
    const std::string& subcommand() const { return subcommand_; }
    bool is_explicit(const std::string& key) const { return explicit_.count(key) > 0; }
    std::ostream& out() { return out_; }
    json& parameters() { return parameters_; }
    json& result() { return result_; }

    std::uint64_t seed() const {
        if (!config_.seed)
            throw ConfigError("subcommand '" + subcommand_ + "' uses random numbers and needs --seed or sde.seed", 0);
        return *config_.seed;
    }

    std::ofstream open(const std::string& name) {
        std::ofstream os(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot write " + (dir_ / name).string());
        return os;
    }

    void output(const std::string& name, std::size_t rows) {
        outputs_.push_back({{"file", name}, {"rows", rows}});
        log("wrote " + name + " (" + std::to_string(rows) + " rows)");
    }

    void log(const std::string& message) {
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        std::tm tm{};
        gmtime_r(&t, &tm);
        log_ << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << ' ' << message << '\n';
        log_.flush();
    }

    void write_manifest(int exit_code, const std::string& status, const std::string& message) {
        std::ofstream os(dir_ / "manifest.jsonl", std::ios::binary | std::ios::trunc);
        os << json{{"kind", "run"}, {"subcommand", subcommand_}, {"version", kVersion}}.dump() << '\n';
        json cfg = {{"kind", "config"}};
        for (const auto& [k, v] : describe_config(config_)) cfg[k] = v;
        os << cfg.dump() << '\n';
        json params = {{"kind", "parameters"}};
        for (auto it = parameters_.begin(); it != parameters_.end(); ++it) params[it.key()] = it.value();
        os << params.dump() << '\n';
        for (const auto& o : outputs_) {
            json line = {{"kind", "output"}};
            line.update(o);
            os << line.dump() << '\n';
        }
        json res = {{"kind", "result"}, {"status", status}, {"exit_code", exit_code}};
        if (!message.empty()) res["message"] = message;
        for (auto it = result_.begin(); it != result_.end(); ++it) res[it.key()] = it.value();
        os << res.dump() << '\n';
        log("finished " + subcommand_ + " with exit code " + std::to_string(exit_code));
    }

private:
    std::string subcommand_;
    RunConfig config_;
    std::set<std::string> explicit_;
    std::ostream& out_;
    fs::path dir_;
    std::ofstream log_;
    json parameters_ = json::object();
    json result_ = json::object();
    std::vector<json> outputs_;
};

// ------------------------------------------------------------------ helpers

std::string point_text(const Point& x) {
    std::string s;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += (i ? " " : "") + format_double(x(i));
    return s;
}

std::vector<std::string> coord_columns(const std::string& prefix, int dim) {
    std::vector<std::string> out;
    for (int i = 1; i <= dim; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

CoefficientSet coefficients(Context& ctx) {
    const auto& c = ctx.config();
    CoefficientSet cs = example(c.example, c.params);
    ctx.parameters()["example"] = cs.name();
    ctx.parameters()["dim"] = cs.dim();
    ctx.parameters()["p_exponent"] = cs.p_exponent();
    ctx.parameters()["finite_difference_fallback"] = cs.uses_finite_differences();
    if (cs.uses_finite_differences()) ctx.parameters()["finite_difference_step"] = "1e-4*(1+|x|)";
    return cs;
}

DensitySolution density_solution(Context& ctx, const CoefficientSet& cs) {
    const auto& c = ctx.config();
    DensityOptions opts;
    opts.workers = c.workers;
    ctx.parameters()["mesh_h"] = c.h;
    ctx.parameters()["r_obs"] = c.r_obs;
    ctx.parameters()["eps"] = c.eps;
    ctx.parameters()["solver_tolerance"] = opts.solver.tolerance;
    ctx.parameters()["solver_direct_threshold"] = opts.solver.direct_threshold;
    ctx.parameters()["solver_max_iterations"] = opts.solver.max_iterations;
    return build_density(cs, c.schedule, c.h, c.r_obs, c.eps, opts);
}

/// Density on the observation disk: built by the ball scheme or taken from the registry.
ScalarField resolve_density(Context& ctx, const CoefficientSet& cs) {
    ctx.parameters()["density"] = ctx.config().density;
    if (ctx.config().density == "reference") {
        if (!cs.reference_density)
            throw Error("example '" + cs.name() + "' has no registered reference density; use --density fem");
        return *cs.reference_density;
    }
    if (cs.dim() != 2) throw Error("the ball scheme builds densities in dimension 2 only");
    const auto sol = density_solution(ctx, cs);
    ctx.parameters()["density_balls"] = static_cast<int>(sol.balls().size());
    return sol.rho();
}

SdeProblem sde_problem(Context& ctx, const CoefficientSet& cs) {
    const auto& c = ctx.config();
    SdeProblem p(cs);
    p.dt = c.dt;
    p.stop_radius = c.stop_radius;
    p.taming = c.taming.value_or(cs.has_singularities());
    p.drift_mode = c.drift;
    p.ball_radii = c.ball_radii;
    p.workers = c.workers;
    if (p.drift_mode == DriftMode::Ghat) p.rho = resolve_density(ctx, cs);
    ctx.parameters()["dt"] = p.dt;
    ctx.parameters()["taming"] = p.taming;
    ctx.parameters()["stop_radius"] = p.stop_radius;
    ctx.parameters()["seed"] = ctx.seed();
    ctx.parameters()["paths"] = c.paths;
    return p;
}

/// Quadrature mesh covering the support of f (or the observation disk).
std::shared_ptr<const TriMesh> support_mesh(Context& ctx, const BoundedField& f) {
    const auto& c = ctx.config();
    double radius = c.r_obs;
    if (f.support_center) radius = f.support_center->norm() + f.support_radius;
    if (c.density == "fem" && radius > c.r_obs * (1.0 + 1e-12))
        throw Error("support of '" + f.spec + "' leaves the observation disk of radius " + format_double(c.r_obs) +
                    "; enlarge --r-obs or use --density reference");
    ctx.parameters()["norm_mesh_radius"] = radius;
    ctx.parameters()["norm_mesh_h"] = c.norm_mesh_h;
    return std::make_shared<const TriMesh>(mesh_disk(radius, std::min(c.norm_mesh_h, 0.5 * radius)));
}

BallSet parse_ball_set(const std::string& spec, int dim) {
    const auto parts = split(spec, ':');
    const auto c = parts.size() == 2 ? parse_double_list(parts[0]) : std::vector<double>{};
    if (c.size() != 2) throw ParseError("set spec '" + spec + "' must look like cx,cy:r");
    BallSet set{Point::Zero(dim), parse_double(parts[1])};
    set.center(0) = c[0];
    set.center(1) = c[1];
    return set;
}

// ----------------------------------------------------------------- handlers

int cmd_list_examples(Context& ctx) {
    auto os = ctx.open("examples.csv");
    CsvWriter csv(os, {"name", "dim", "p_exponent", "q_exponent", "singular", "reference_density",
                       "finite_differences"});
    std::size_t rows = 0;
    for (const auto& name : example_names()) {
        ExampleParams params = ctx.config().params;
        const auto cs = example(name, params);
        csv.cell(name).cell(cs.dim()).cell(cs.p_exponent()).cell(cs.q_exponent()).cell(cs.has_singularities())
            .cell(cs.reference_density.has_value()).cell(cs.uses_finite_differences());
        csv.end_row();
        ctx.out() << name << '\n';
        ++rows;
    }
    ctx.output("examples.csv", rows);
    return kSuccess;
}

int cmd_build_density(Context& ctx) {
    const auto cs = coefficients(ctx);
    const auto& c = ctx.config();
    const auto sol = density_solution(ctx, cs);

    auto os = ctx.open("density_balls.csv");
    CsvWriter csv(os, {"n", "vertices", "min_u", "harnack_ratio", "delta", "solver", "iterations", "residual",
                       "residual_bound"});
    for (const auto& d : sol.diagnostics()) {
        csv.cell(d.n).cell(d.vertices).cell(d.min_u).cell(d.harnack_ratio).cell(d.delta_to_previous)
            .cell(d.solve.method).cell(d.solve.iterations).cell(d.solve.residual).cell(d.solve.residual_bound);
        csv.end_row();
    }
    ctx.output("density_balls.csv", sol.diagnostics().size());

    auto ds = ctx.open("density.csv");
    sol.rho_nodal().write_csv(ds, c.r_obs);
    const auto& rho = sol.rho_nodal();
    const auto& verts = rho.mesh().vertices();
    std::size_t rows = 0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double max_rel = 0.0;
    for (std::size_t i = 0; i < verts.size(); ++i) {
        if (verts[i].norm() > c.r_obs) continue;
        const double v = rho.values()(static_cast<Eigen::Index>(i));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        if (cs.reference_density) {
            const double ref = (*cs.reference_density)(embed(verts[i], 2));
            max_rel = std::max(max_rel, std::abs(v - ref) / ref);
        }
        ++rows;
    }
    ctx.output("density.csv", rows);
    ctx.result()["accepted_n"] = sol.diagnostics().back().n;
    ctx.result()["rho_min"] = lo;
    ctx.result()["rho_max"] = hi;
    if (cs.reference_density) ctx.result()["max_relative_error_vs_reference"] = max_rel;
    ctx.out() << "density accepted at n = " << sol.diagnostics().back().n << ", rho in [" << format_double(lo)
              << ", " << format_double(hi) << "] on the observation disk\n";
    return kSuccess;
}

int cmd_verify_invariance(Context& ctx) {
    const auto cs = coefficients(ctx);
    const auto& c = ctx.config();
    const ScalarField rho = resolve_density(ctx, cs);
    const auto mesh = std::make_shared<const TriMesh>(mesh_disk(c.r_obs, c.h));
    const auto bumps = random_bumps(c.bumps, c.r_obs, c.bump_seed);
    ctx.parameters()["quadrature_mesh_h"] = c.h;
    ctx.parameters()["bumps"] = c.bumps;
    ctx.parameters()["bump_seed"] = c.bump_seed;
    ctx.parameters()["tolerance"] = c.tolerance;
    ctx.parameters()["adjoint_tolerance"] = c.adjoint_tolerance;

    std::vector<double> c2;
    for (const auto& b : bumps) c2.push_back(b.c2_norm(*mesh));
    const PointwiseVector divfree = [&](const Point& x) {
        return divergence_free_drift(cs, rho, x, SingularPolicy::accept);
    };

    auto os = ctx.open("verify_invariance.csv");
    CsvWriter csv(os, {"test_id", "center", "radius", "residual_inv", "residual_divfree", "adjoint_gap_L",
                       "adjoint_gap_Lhat", "tolerance", "pass", "c2_norm", "pair_id", "adjoint_tolerance"});
    int failures = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < bumps.size(); ++i) {
        const std::size_t j = (i + 1) % bumps.size();
        const double inv = invariance_residual(cs, rho, bumps[i], *mesh);
        const double div = divfree_residual(divfree, rho, bumps[i], *mesh);
        const auto [gap_l, gap_lhat] = adjoint_gap(cs, rho, bumps[i], bumps[j], *mesh);
        const double tol = c.tolerance * c2[i];
        const double adj_tol = c.adjoint_tolerance * c2[i] * c2[j];
        const bool pass = std::abs(inv) <= tol && std::abs(div) <= tol && std::abs(gap_l) <= adj_tol &&
                          std::abs(gap_lhat) <= adj_tol;
        failures += pass ? 0 : 1;
        worst = std::max({worst, std::abs(inv) / c2[i], std::abs(div) / c2[i]});
        csv.cell(static_cast<int>(i)).cell(point_text(embed(bumps[i].center(), 2))).cell(bumps[i].radius())
            .cell(inv).cell(div).cell(gap_l).cell(gap_lhat).cell(tol).cell(pass).cell(c2[i])
            .cell(static_cast<int>(j)).cell(adj_tol);
        csv.end_row();
    }
    ctx.output("verify_invariance.csv", bumps.size());
    ctx.result()["failures"] = failures;
    ctx.result()["worst_normalized_residual"] = worst;
    ctx.out() << bumps.size() - static_cast<std::size_t>(failures) << "/" << bumps.size() << " bumps pass\n";
    return failures == 0 ? kSuccess : kCheckFailed;
}

int cmd_simulate(Context& ctx) {
    const auto cs = coefficients(ctx);
    const auto& c = ctx.config();
    const auto problem = sde_problem(ctx, cs);
    const auto starts = parse_grid(c.starts, cs.dim());
    const auto bundle = simulate(problem, starts, c.T, c.paths, ctx.seed(), {c.record_every});
    ctx.parameters()["T"] = c.T;
    ctx.parameters()["record_every"] = bundle.record_every;
    const int d = bundle.dim;

    auto os = ctx.open("simulate.csv");
    CsvWriter csv(os, concat(concat({"start", "t"}, coord_columns("mean_x", d)),
                             {"second_moment", "sup_norm_mean", "exploded"}));
    std::size_t rows = 0;
    for (std::size_t s = 0; s < starts.size(); ++s) {
        for (std::size_t r = 0; r < bundle.record_times.size(); ++r) {
            const double t = bundle.record_times[r];
            Point mean = Point::Zero(d);
            double second = 0.0;
            double sup = 0.0;
            int alive = 0;
            int exploded = 0;
            for (int p = 0; p < bundle.n_paths; ++p) {
                const auto& rec = bundle.path(s, p);
                if (rec.explosion_time <= t) {
                    ++exploded;
                    continue;
                }
                const Point x = bundle.state(rec, r);
                mean += x;
                second += x.squaredNorm();
                sup += rec.running_sup[r];
                ++alive;
            }
            const double n = alive > 0 ? alive : std::nan("");
            csv.cell(static_cast<int>(s)).cell(t);
            for (int i = 0; i < d; ++i) csv.cell(mean(i) / n);
            csv.cell(second / n).cell(sup / n).cell(exploded);
            csv.end_row();
            ++rows;
        }
    }
    ctx.output("simulate.csv", rows);

    if (c.trajectories) {
        auto ts = ctx.open("trajectories.csv");
        CsvWriter tcsv(ts, concat({"path_id", "t"}, coord_columns("x", d)));
        std::size_t trows = 0;
        for (std::size_t k = 0; k < bundle.paths.size(); ++k)
            for (std::size_t r = 0; r < bundle.record_times.size(); ++r) {
                tcsv.cell(k).cell(bundle.record_times[r]);
                const Point x = bundle.state(bundle.paths[k], r);
                for (int i = 0; i < d; ++i) tcsv.cell(x(i));
                tcsv.end_row();
                ++trows;
            }
        ctx.output("trajectories.csv", trows);
    }
    ctx.result()["exploded"] = bundle.exploded_count();
    ctx.out() << bundle.paths.size() << " paths, " << bundle.exploded_count() << " exploded\n";
    return kSuccess;
}

int cmd_krylov(Context& ctx) {
    const auto cs = coefficients(ctx);
    const auto& c = ctx.config();
    if (cs.dim() != 2) throw Error("krylov: the L^r norm of g is computed on planar meshes only");
    const auto problem = sde_problem(ctx, cs);
    const auto g = parse_field(c.g, cs.dim());
    const ScalarField rho = resolve_density(ctx, cs);
    const auto mesh = support_mesh(ctx, g);
    const auto grid = parse_grid(c.grid, cs.dim());
    ctx.parameters()["r_exponent"] = format_double(c.r_exponent);

    auto os = ctx.open("krylov.csv");
    CsvWriter csv(os, {"t", "point_index", "point", "estimate", "std_error", "g_norm", "g_norm_lebesgue", "ratio"});
    std::size_t rows = 0;
    json ratios = json::array();
    bool finite = true;
    for (double t : c.times) {
        const auto rep = krylov_check(problem, g, rho, grid, t, c.r_exponent, *mesh, c.paths, ctx.seed());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            csv.cell(t).cell(i).cell(point_text(grid[i])).cell(rep.estimates[i].mean)
                .cell(rep.estimates[i].std_error).cell(rep.g_norm).cell(rep.g_norm_lebesgue).cell(rep.ratio);
            csv.end_row();
            ++rows;
        }
        ratios.push_back(rep.ratio);
        finite = finite && std::isfinite(rep.ratio);
    }
    ctx.output("krylov.csv", rows);
    ctx.result()["ratios"] = ratios;
    return finite ? kSuccess : kCheckFailed;
}

int cmd_moments(Context& ctx) {
    const auto cs = coefficients(ctx);
    const auto& c = ctx.config();
    const auto problem = sde_problem(ctx, cs);
    const auto starts = parse_grid(c.starts, cs.dim());
    const auto bundle = simulate(problem, starts, c.T, c.paths, ctx.seed(), {c.record_every});
    std::vector<double> ts(bundle.record_times.begin() + 1, bundle.record_times.end());
    const auto rep = moment_report(bundle, ts);
    ctx.parameters()["T"] = c.T;
    ctx.parameters()["record_every"] = bundle.record_every;

    auto os = ctx.open("moments.csv");
    CsvWriter csv(os, {"t", "sup_moment", "std_error", "envelope"});
    for (std::size_t k = 0; k < ts.size(); ++k) {
        csv.cell(ts[k]).cell(rep.sup_moment[k].mean).cell(rep.sup_moment[k].std_error)
            .cell(rep.C5 * std::exp(rep.C6 * ts[k]));
        csv.end_row();
    }
    ctx.output("moments.csv", ts.size());
    ctx.result()["C5"] = rep.C5;
    ctx.result()["C6"] = rep.C6;
    ctx.result()["C5_fit"] = rep.C5_fit;
    ctx.result()["monotone"] = rep.monotone;
    ctx.result()["envelope_dominates"] = rep.envelope_dominates;
    ctx.result()["contaminated"] = rep.contaminated;
    ctx.result()["surviving_paths"] = rep.surviving_paths;
    if (!rep.warning.empty()) ctx.result()["warning"] = rep.warning;
    return rep.monotone && rep.envelope_dominates ? kSuccess : kCheckFailed;
}

int cmd_nonexplosion(Context& ctx) {
    const auto cs = coefficients(ctx);
    const auto& c = ctx.config();
    std::string spec = c.grid;
    if (!ctx.is_explicit("estimators.grid")) {
        spec = c.N0 > 0.0 ? "annulus:" + format_double(c.N0) + ":" + format_double(c.N0 + 10.0) + ":10000"
                          : "ball:10:10000";
    }
    const auto grid = parse_grid(spec, cs.dim());
    const auto rep = nonexplosion_criterion(cs, grid, c.N0, c.C);
    ctx.parameters()["grid"] = spec;
    ctx.parameters()["N0"] = c.N0;
    ctx.parameters()["C"] = c.C;

    auto os = ctx.open("nonexplosion.csv");
    CsvWriter csv(os, {"point", "lhs", "bound", "margin", "pass"});
    std::size_t rows = 0;
    for (const auto& x : grid) {
        if (x.norm() < c.N0) continue;
        const Matrix a = cs.A()(x);
        const double r2 = x.squaredNorm();
        const double lhs = -x.dot(a * x) / (r2 + 1.0) + 0.5 * a.trace() +
                           drift_G(cs, x, SingularPolicy::accept).value.dot(x);
        const double bound = -c.C * (r2 + 1.0);
        csv.cell(point_text(x)).cell(lhs).cell(bound).cell(bound - lhs).cell(lhs <= bound);
        csv.end_row();
        ++rows;
    }
    ctx.output("nonexplosion.csv", rows);
    ctx.result()["points_checked"] = rep.points_checked;
    ctx.result()["points_skipped"] = rep.points_skipped;
    ctx.result()["violations"] = rep.violations;
    ctx.result()["worst_margin"] = rep.worst_margin;
    ctx.out() << (rep.pass() ? "criterion holds" : "criterion fails") << " on " << rep.points_checked
              << " points (worst margin " << format_double(rep.worst_margin) << ")\n";
    return rep.pass() ? kSuccess : kCheckFailed;
}

std::optional<double> field_mass(Context& ctx, const CoefficientSet& cs, const BoundedField& f) {
    if (!cs.reference_density || !f.support_center || cs.dim() != 2) return std::nullopt;
    const double radius = f.support_center->norm() + f.support_radius;
    const TriMesh mesh = mesh_disk(radius, std::min(ctx.config().norm_mesh_h, 0.5 * radius));
    const auto& rho = *cs.reference_density;
    return integrate(mesh, [&](const Vec2& x) {
        const Point p = embed(x, 2);
        return f.field(p) * rho(p);
    });
}

int cmd_semigroup(Context& ctx) {
    const auto cs = coefficients(ctx);
    const auto& c = ctx.config();
    const auto problem = sde_problem(ctx, cs);
    const auto f = parse_field(c.f, cs.dim());
    const auto xs = parse_grid(c.grid, cs.dim());
    const auto mass = field_mass(ctx, cs, f);

    auto os = ctx.open("semigroup.csv");
    CsvWriter csv(os, {"t", "point_index", "point", "estimate", "std_error", "absorbed"});
    auto ms = ctx.open("semigroup_modulus.csv");
    CsvWriter mcsv(ms, {"t", "i", "j", "modulus", "gamma"});
    std::size_t rows = 0;
    std::size_t mrows = 0;
    bool suspicious = false;
    for (double t : c.times) {
        const auto rep = semigroup_mc(problem, f, t, xs, c.paths, ctx.seed(), mass);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            csv.cell(t).cell(i).cell(point_text(xs[i])).cell(rep.estimates[i].mean).cell(rep.estimates[i].std_error)
                .cell(rep.absorbed[i]);
            csv.end_row();
            ++rows;
        }
        for (const auto& m : rep.modulus) {
            mcsv.cell(t).cell(m.i).cell(m.j).cell(m.value).cell(rep.gamma);
            mcsv.end_row();
            ++mrows;
        }
        suspicious = suspicious || rep.suspicious;
    }
    ctx.output("semigroup.csv", rows);
    ctx.output("semigroup_modulus.csv", mrows);
    ctx.result()["irreducibility_suspicious"] = suspicious;
    return kSuccess;
}

int cmd_resolvent(Context& ctx) {
    const auto cs = coefficients(ctx);
    const auto& c = ctx.config();
    const auto problem = sde_problem(ctx, cs);
    const auto g = parse_field(c.g, cs.dim());
    const auto xs = parse_grid(c.grid, cs.dim());
    ctx.parameters()["T_cut"] = c.T_cut;
    ctx.parameters()["truncation_tol"] = c.truncation_tol;

    auto os = ctx.open("resolvent.csv");
    CsvWriter csv(os, {"alpha", "point_index", "point", "estimate", "std_error", "truncation_bound"});
    std::size_t rows = 0;
    for (double alpha : c.alphas) {
        const auto rep = resolvent_mc(problem, g, alpha, xs, c.T_cut, c.paths, ctx.seed(), c.truncation_tol);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            csv.cell(alpha).cell(i).cell(point_text(xs[i])).cell(rep.estimates[i].mean)
                .cell(rep.estimates[i].std_error).cell(rep.truncation_bound);
            csv.end_row();
            ++rows;
        }
    }
    ctx.output("resolvent.csv", rows);
    return kSuccess;
}

int cmd_subinvariance(Context& ctx) {
    const auto cs = coefficients(ctx);
    const auto& c = ctx.config();
    if (cs.dim() != 2) throw Error("subinvariance: quadrature starts need a planar coefficient set");
    const auto problem = sde_problem(ctx, cs);
    const auto f = parse_field(c.f, cs.dim());
    const ScalarField rho = resolve_density(ctx, cs);
    const TriMesh mesh = mesh_disk(c.r_obs, c.h);
    ctx.parameters()["quadrature_mesh_h"] = c.h;

    auto os = ctx.open("subinvariance.csv");
    CsvWriter csv(os, {"t", "lhs", "lhs_std_error", "rhs", "starts", "pass", "invariant"});
    bool all_pass = true;
    for (double t : c.times) {
        const auto rep = subinvariance_check(problem, rho, f, t, mesh, c.paths, ctx.seed());
        csv.cell(t).cell(rep.lhs).cell(rep.lhs_std_error).cell(rep.rhs).cell(rep.starts).cell(rep.pass)
            .cell(rep.invariant);
        csv.end_row();
        all_pass = all_pass && rep.pass;
    }
    ctx.output("subinvariance.csv", c.times.size());
    ctx.result()["pass"] = all_pass;
    return all_pass ? kSuccess : kCheckFailed;
}

int cmd_irreducibility(Context& ctx) {
    const auto cs = coefficients(ctx);
    const auto& c = ctx.config();
    const auto problem = sde_problem(ctx, cs);
    const auto set = parse_ball_set(c.set, cs.dim());
    const auto xs = parse_grid(c.grid, cs.dim());
    ctx.parameters()["confidence"] = 0.95;

    auto os = ctx.open("irreducibility.csv");
    CsvWriter csv(os, {"t", "point_index", "point", "hits", "n", "estimate", "lower", "upper"});
    std::size_t rows = 0;
    for (double t : c.times) {
        const auto rep = irreducibility_probe(problem, set, t, xs, c.paths, ctx.seed());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const auto& cell = rep.cells[i];
            csv.cell(t).cell(i).cell(point_text(xs[i])).cell(cell.hits).cell(cell.n).cell(cell.estimate)
                .cell(cell.lower).cell(cell.upper);
            csv.end_row();
            ++rows;
        }
    }
    ctx.output("irreducibility.csv", rows);
    return kSuccess;
}

struct Subcommand {
    const char* name;
    const char* description;
    std::vector<std::string> flags;
    std::function<int(Context&)> handler;
};

const std::vector<std::string> kCommon = {"--example", "--dim", "--diffusion", "--theta", "--workers", "--output"};
const std::vector<std::string> kDensity = {"--h", "--r-obs", "--schedule", "--eps", "--density"};
const std::vector<std::string> kSde = {"--dt", "--paths", "--seed", "--stop-radius", "--taming", "--drift"};

std::vector<std::string> merge(std::initializer_list<std::vector<std::string>> lists) {
    std::vector<std::string> out;
    for (const auto& l : lists)
        for (const auto& f : l)
            if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
    return out;
}

const std::vector<Subcommand>& subcommands() {
    static const std::vector<Subcommand> all = {
        {"build-density", "construct the invariant density by the ball scheme",
         merge({kCommon, {"--h", "--r-obs", "--schedule", "--eps"}}), cmd_build_density},
        {"verify-invariance", "quadrature checks of invariance, divergence and adjointness",
         merge({kCommon, kDensity, {"--bumps", "--bump-seed", "--tolerance", "--adjoint-tolerance"}}),
         cmd_verify_invariance},
        {"simulate", "Euler-Maruyama paths with exit and explosion bookkeeping",
         merge({kCommon, kSde, {"--T", "--starts", "--ball-radii", "--record-every", "--trajectories"}, kDensity}),
         cmd_simulate},
        {"krylov", "occupation-time estimates against |g|_{L^r(m)}",
         merge({kCommon, kSde, {"--grid", "--t", "--g", "--r-exponent", "--norm-mesh-h"}, kDensity}), cmd_krylov},
        {"moments", "running-sup moments and exponential envelope",
         merge({kCommon, kSde, {"--T", "--starts", "--record-every"}, kDensity}), cmd_moments},
        {"nonexplosion-check", "pointwise non-explosion criterion outside B_N0",
         merge({kCommon, {"--grid", "--N0", "--C"}}), cmd_nonexplosion},
        {"semigroup", "Monte Carlo P_t f with continuity-modulus table",
         merge({kCommon, kSde, {"--grid", "--t", "--f", "--norm-mesh-h"}, kDensity}), cmd_semigroup},
        {"resolvent", "Monte Carlo resolvent G_alpha g",
         merge({kCommon, kSde, {"--grid", "--alpha", "--g", "--T-cut", "--truncation-tol"}, kDensity}),
         cmd_resolvent},
        {"subinvariance", "compare int P_t f dm with int f dm",
         merge({kCommon, kSde, kDensity, {"--t", "--f"}}), cmd_subinvariance},
        {"irreducibility", "hit probabilities of a ball with Clopper-Pearson intervals",
         merge({kCommon, kSde, {"--grid", "--t", "--set"}, kDensity}), cmd_irreducibility},
        {"list-examples", "list the registered coefficient sets", merge({kCommon}), cmd_list_examples},
    };
    return all;
}

const char* key_for(const std::string& flag) {
    for (const auto& f : flags())
        if (flag == f.name) return f.key;
    return nullptr;
}

const char* help_for(const std::string& flag) {
    for (const auto& f : flags())
        if (flag == f.name) return f.help;
    return "";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Invariant densities, SDE simulation and Monte Carlo checks for divergence-form diffusions",
                 "invmeas"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "print help and exit");

    struct Bound {
        std::string config_path;
        std::vector<std::string> params;
        std::map<std::string, std::string> values;
    };
    std::map<std::string, Bound> bound;
    std::map<std::string, CLI::App*> apps;
    for (const auto& sc : subcommands()) {
        auto* sub = app.add_subcommand(sc.name, sc.description);
        Bound& b = bound[sc.name];
        sub->add_option("--config", b.config_path, "config file (section.key = value lines)");
        sub->add_option("--param", b.params, "extra setting key=value (repeatable)");
        for (const auto& flag : sc.flags)
            sub->add_option(flag == "--output" ? "-o,--output" : flag, b.values[key_for(flag)], help_for(flag));
        apps[sc.name] = sub;
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kError;
    }

    const Subcommand* chosen = nullptr;
    for (const auto& sc : subcommands())
        if (apps[sc.name]->parsed()) chosen = &sc;
    if (!chosen) return kError;
    const Bound& b = bound[chosen->name];
    CLI::App* sub = apps[chosen->name];

    RunConfig config;
    std::set<std::string> explicit_keys;
    try {
        if (!b.config_path.empty()) {
            std::vector<std::string> keys;
            config = parse_config(read_file(b.config_path), &keys);
            explicit_keys.insert(keys.begin(), keys.end());
        }
        for (const auto& p : b.params) {
            const auto eq = p.find('=');
            if (eq == std::string::npos) throw ConfigError("--param '" + p + "' must be key=value", 0);
            const std::string key = trim(p.substr(0, eq));
            apply_setting(config, key, p.substr(eq + 1));
            explicit_keys.insert(key);
        }
        for (const auto& flag : chosen->flags) {
            if (sub->count(flag) == 0) continue;
            const std::string key = key_for(flag);
            apply_setting(config, key, b.values.at(key));
            explicit_keys.insert(key);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kError;
    }

    std::unique_ptr<Context> ctx;
    try {
        ctx = std::make_unique<Context>(chosen->name, config, explicit_keys, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kError;
    }

    int code = kError;
    std::string status = "error";
    std::string message;
    try {
        code = chosen->handler(*ctx);
        status = code == kSuccess ? "pass" : "check-failed";
    } catch (const NonConvergence& e) {
        code = kCheckFailed;
        status = "check-failed";
        message = e.what();
        json deltas = json::array();
        for (double d : e.deltas()) deltas.push_back(d);
        ctx->result()["deltas"] = deltas;
    } catch (const PositivityFailure& e) {
        code = kCheckFailed;
        status = "check-failed";
        message = e.what();
        ctx->result()["vertex"] = e.vertex();
        ctx->result()["value"] = e.value();
    } catch (const std::exception& e) {
        code = kError;
        status = "error";
        message = e.what();
    }
    if (!message.empty()) err << (code == kCheckFailed ? "check failed: " : "error: ") << message << '\n';
    try {
        ctx->write_manifest(code, status, message);
    } catch (const std::exception& e) {
        err << "error: cannot write manifest: " << e.what() << '\n';
        return kError;
    }
    return code;
}

} // namespace invmeas::cli
