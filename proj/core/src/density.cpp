#include "invmeas/density.hpp"

#include "invmeas/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace invmeas {

FemFunction solve_ball(const CoefficientSet& cs, int n, double h, const DensityOptions& options, SolveInfo* info) {
    if (n < 1) throw std::invalid_argument("solve_ball: ball index must be positive");
    auto mesh = std::make_shared<const TriMesh>(mesh_disk(static_cast<double>(n), h));
    const LinearSystem sys = assemble_ball_form(cs, mesh, 0.0, AssemblyOptions{options.workers});
    FemFunction v = solve(sys, info, options.solver);

    Eigen::VectorXd u = v.values().array() + 1.0;
    for (int b : mesh->boundary_vertices()) u(b) = 1.0;
    Eigen::Index worst = 0;
    const double min_u = u.minCoeff(&worst);
    if (!(min_u > 0.0)) {
        std::ostringstream os;
        os.precision(6);
        const Vec2& x = mesh->vertices()[static_cast<std::size_t>(worst)];
        os << "solve_ball(n=" << n << ", h=" << h << "): u_n = " << min_u << " <= 0 at vertex " << worst << " ("
           << x(0) << ", " << x(1) << "); refine h to reduce the discretization error";
        throw PositivityFailure(os.str(), static_cast<int>(worst), min_u);
    }
    return FemFunction(mesh, std::move(u));
}

FemFunction normalize_at_origin(const FemFunction& u) {
    const double u0 = u.values()(0);
    if (!(u0 > 0.0)) throw PositivityFailure("normalize_at_origin: u(0) is not positive", 0, u0);
    return FemFunction(u.mesh_ptr(), u.values() / u0);
}

double harnack_diagnostic(const FemFunction& rho_n, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("harnack_diagnostic: r must be positive");
    const TriMesh& m = rho_n.mesh();
    if (2.0 * r > m.radius() * (1.0 + 1e-12))
        throw std::invalid_argument("harnack_diagnostic: the ball of radius 2r leaves the mesh disk");
    const double r2 = 4.0 * r * r * (1.0 + 1e-12);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    int lo_vertex = 0;
    for (int v = 0; v < m.num_vertices(); ++v) {
        if (m.vertices()[static_cast<std::size_t>(v)].squaredNorm() > r2) continue;
        const double x = rho_n.values()(v);
        if (x < lo) {
            lo = x;
            lo_vertex = v;
        }
        hi = std::max(hi, x);
    }
    if (!(lo > 0.0)) throw PositivityFailure("harnack_diagnostic: non-positive density value", lo_vertex, lo);
    return hi / lo;
}

DensitySolution::DensitySolution(std::string set_name, double h, double r_obs, std::vector<BallRecord> balls,
                                 std::vector<BallDiagnostics> diagnostics)
    : set_name_(std::move(set_name)), h_(h), r_obs_(r_obs), balls_(std::move(balls)),
      diagnostics_(std::move(diagnostics)), rho_(fem_scalar_field(balls_.back().rho, r_obs)) {}

DensitySolution build_density(const CoefficientSet& cs, const std::vector<int>& schedule, double h, double r_obs,
                              double eps, const DensityOptions& options) {
    if (schedule.empty()) throw std::invalid_argument("build_density: empty schedule");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (schedule[i] <= schedule[i - 1]) throw std::invalid_argument("build_density: schedule must increase");
    if (!(r_obs > 0.0) || !(r_obs < schedule.front()))
        throw std::invalid_argument("build_density: need 0 < r_obs < min(schedule)");
    if (!(eps > 0.0)) throw std::invalid_argument("build_density: eps must be positive");

    const double r2 = r_obs * r_obs * (1.0 + 1e-12);
    std::vector<BallRecord> balls;
    std::vector<BallDiagnostics> diags;
    std::vector<double> deltas;
    for (int n : schedule) {
        BallDiagnostics d;
        d.n = n;
        FemFunction u = solve_ball(cs, n, h, options, &d.solve);
        FemFunction rho = normalize_at_origin(u);
        d.min_u = u.values().minCoeff();
        d.vertices = u.mesh().num_vertices();
        d.harnack_ratio = harnack_diagnostic(rho, 0.5 * r_obs);
        d.delta_to_previous = std::numeric_limits<double>::quiet_NaN();
        if (!balls.empty()) {
            const FemFunction& prev = balls.back().rho;
            double delta = 0.0;
            const TriMesh& m = rho.mesh();
            for (int v = 0; v < m.num_vertices(); ++v) {
                const Vec2& x = m.vertices()[static_cast<std::size_t>(v)];
                if (x.squaredNorm() > r2) continue;
                delta = std::max(delta, std::abs(rho.values()(v) - prev(x)));
            }
            d.delta_to_previous = delta;
            deltas.push_back(delta);
        }
        balls.push_back(BallRecord{n, std::move(u), std::move(rho)});
        diags.push_back(d);
        if (!deltas.empty() && deltas.back() < eps)
            return DensitySolution(cs.name(), h, r_obs, std::move(balls), std::move(diags));
    }
    std::ostringstream os;
    os << "build_density: schedule exhausted without sup-norm delta < " << eps << " on B_" << r_obs
       << "; deltas:";
    for (double x : deltas) os << ' ' << x;
    throw NonConvergence(os.str(), deltas);
}

} // namespace invmeas
