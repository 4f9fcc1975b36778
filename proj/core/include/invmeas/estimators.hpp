#pragma once

#include "invmeas/coefficients.hpp"
#include "invmeas/field_spec.hpp"
#include "invmeas/mesh.hpp"
#include "invmeas/sde.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace invmeas {

/// Mean and standard error of a per-path sample.
struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

// ---------------------------------------------------------------- Krylov

struct KrylovReport {
    std::vector<Point> grid;
    double t = 0.0;
    double r_exponent = 0.0;
    /// E_x[int_0^t g(X_s) ds] per start, trapezoidal in time.
    std::vector<McEstimate> estimates;
    /// |g|_{L^r(rho dx)} and |g|_{L^r(dx)} by mesh quadrature (max over nodes for r = inf).
    double g_norm = 0.0;
    double g_norm_lebesgue = 0.0;
    /// max estimate / g_norm; 0 when g vanishes.
    double ratio = 0.0;
};

KrylovReport krylov_check(const SdeProblem& problem, const BoundedField& g, const ScalarField& rho,
                          const std::vector<Point>& grid, double t, double r_exponent, const TriMesh& norm_mesh,
                          int n_paths, std::uint64_t seed);

// --------------------------------------------------------------- moments

struct MomentReport {
    std::vector<double> ts;
    /// max over starts of E[sup_{s<=t} |X_s|], with the standard error of that start.
    std::vector<McEstimate> sup_moment;
    /// Least-squares slope of log sup_moment against t, and the smallest C5
    /// for which C5 exp(C6 t) dominates every point.
    double C5 = 0.0;
    double C6 = 0.0;
    /// exp(intercept) of the least-squares line before lifting.
    double C5_fit = 0.0;
    bool monotone = true;
    bool envelope_dominates = true;
    bool contaminated = false;
    int surviving_paths = 0;
    std::string warning;
};

MomentReport moment_report(const PathBundle& bundle, const std::vector<double>& ts);

// ---------------------------------------------------------------- growth

struct PointCheck {
    Point x;
    double margin;
};

struct GrowthReport {
    std::size_t points_checked = 0;
    /// min over points of |h1| + C (sqrt|x| + 1) - max|sigma_ij|.
    double worst_sigma_margin = std::numeric_limits<double>::infinity();
    /// min over points of |h2| + C (|x| + 1) - max|g_i|.
    double worst_drift_margin = std::numeric_limits<double>::infinity();
    std::size_t violations = 0;
    /// First offending points (at most 20).
    std::vector<PointCheck> offending;
    bool pass() const { return violations == 0; }
};

GrowthReport growth_hypothesis_check(const CoefficientSet& cs, const ScalarField& h1, const ScalarField& h2,
                                     double C_const, const std::vector<Point>& grid);

// ---------------------------------------------------------- non-explosion

struct NonexplosionReport {
    std::size_t points_checked = 0;
    std::size_t points_skipped = 0;
    /// min over points of -C(|x|^2 + 1) - LHS(x); negative means violation.
    double worst_margin = std::numeric_limits<double>::infinity();
    Point worst_point;
    std::size_t violations = 0;
    std::vector<PointCheck> offending;
    bool pass() const { return points_checked > 0 && violations == 0; }
};

/// LHS(x) = -<A x, x>/(|x|^2 + 1) + tr(A)/2 + <G, x>, required to be at most
/// -C(|x|^2 + 1) for |x| >= N0. Grid points inside B_N0 are skipped.
NonexplosionReport nonexplosion_criterion(const CoefficientSet& cs, const std::vector<Point>& grid, double N0,
                                          double C_const);

// ------------------------------------------------------------- semigroup

struct ModulusEntry {
    std::size_t i;
    std::size_t j;
    double value;
};

struct SemigroupReport {
    std::vector<Point> points;
    double t = 0.0;
    /// E_x[f(X_t)], absorbed paths contributing 0.
    std::vector<McEstimate> estimates;
    std::vector<int> absorbed;
    double gamma = 0.5;
    /// |P_t f(x_i) - P_t f(x_j)| / |x_i - x_j|^gamma; diagnostic only.
    std::vector<ModulusEntry> modulus;
    /// Every estimate is exactly 0 although f has positive mass.
    bool suspicious = false;
};

/// f_mass is int f dm when known; it only feeds the suspicious flag.
SemigroupReport semigroup_mc(const SdeProblem& problem, const BoundedField& f, double t,
                             const std::vector<Point>& xs, int n_paths, std::uint64_t seed,
                             std::optional<double> f_mass = std::nullopt);

// --------------------------------------------------------- irreducibility

struct BallSet {
    Point center;
    double radius;
};

struct HitEstimate {
    int hits = 0;
    int n = 0;
    double estimate = 0.0;
    /// Clopper-Pearson interval at the requested confidence.
    double lower = 0.0;
    double upper = 1.0;
};

struct IrreducibilityReport {
    std::vector<Point> points;
    double t = 0.0;
    double confidence = 0.95;
    std::vector<HitEstimate> cells;
};

std::pair<double, double> clopper_pearson(int hits, int n, double confidence);

IrreducibilityReport irreducibility_probe(const SdeProblem& problem, const BallSet& set, double t,
                                          const std::vector<Point>& xs, int n_paths, std::uint64_t seed,
                                          double confidence = 0.95);

// -------------------------------------------------------------- resolvent

struct ResolventReport {
    std::vector<Point> points;
    double alpha = 0.0;
    double T_cut = 0.0;
    /// int_0^T_cut e^{-alpha t} E_x g(X_t) dt, trapezoidal in time.
    std::vector<McEstimate> estimates;
    /// e^{-alpha T_cut} sup|g| / alpha.
    double truncation_bound = 0.0;
};

/// Refuses (Error naming the required T_cut) when the truncation bound
/// exceeds truncation_tol.
ResolventReport resolvent_mc(const SdeProblem& problem, const BoundedField& g, double alpha,
                             const std::vector<Point>& xs, double T_cut, int n_paths, std::uint64_t seed,
                             double truncation_tol);

// ---------------------------------------------------------- sub-invariance

struct SubinvarianceReport {
    double t = 0.0;
    /// sum over quadrature nodes of w rho(x) P_t f(x).
    double lhs = 0.0;
    double lhs_std_error = 0.0;
    /// int f rho dx with the same rule.
    double rhs = 0.0;
    std::size_t starts = 0;
    /// lhs <= rhs + 3 se.
    bool pass = false;
    /// |lhs - rhs| <= 3 se.
    bool invariant = false;
};

SubinvarianceReport subinvariance_check(const SdeProblem& problem, const ScalarField& rho, const BoundedField& f,
                                        double t, const TriMesh& mesh, int n_paths, std::uint64_t seed);

} // namespace invmeas
