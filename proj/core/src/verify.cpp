#include "invmeas/verify.hpp"

#include "invmeas/error.hpp"
#include "invmeas/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace invmeas {

namespace {

void require_inside(const TestFunction& phi, const TriMesh& mesh, const char* who) {
    if (phi.center().norm() + phi.radius() >= mesh.radius()) {
        std::ostringstream os;
        os << who << ": support of the bump at (" << phi.center()(0) << ", " << phi.center()(1) << ") radius "
           << phi.radius() << " is not inside the mesh disk of radius " << mesh.radius();
        throw QuadratureError(os.str());
    }
}

void require_planar(const CoefficientSet& cs, const char* who) {
    if (cs.dim() != 2) throw CoefficientError(std::string(who) + ": quadrature checks need a 2D coefficient set");
}

struct Disk {
    Vec2 center;
    double radius;
};

Disk disk_of(const TestFunction& phi) { return {phi.center(), phi.radius()}; }

// Degree-5 seven-point rule on the reference triangle (barycentrics, weights summing to 1).
struct RuleNode {
    double l0, l1, l2, w;
};
constexpr double kA1 = 0.059715871789770, kB1 = 0.470142064105115, kW1 = 0.132394152788506;
constexpr double kA2 = 0.797426985353087, kB2 = 0.101286507323456, kW2 = 0.125939180544827;
constexpr RuleNode kRule[7] = {
    {1.0 / 3, 1.0 / 3, 1.0 / 3, 0.225},
    {kA1, kB1, kB1, kW1}, {kB1, kA1, kB1, kW1}, {kB1, kB1, kA1, kW1},
    {kA2, kB2, kB2, kW2}, {kB2, kA2, kB2, kW2}, {kB2, kB2, kA2, kW2},
};

// Piece diameter is r_min * h / kPieceScale: 48 pieces per radius at h = 0.05,
// finer on finer meshes so residuals follow mesh refinement.
constexpr double kPieceScale = 2.4;

// Integral of f over the intersection of the disks. Mesh triangles meeting
// that intersection are split into s^2 similar pieces and each piece gets the
// degree-5 rule.
// Nodes outside any disk contribute 0 without evaluating f.
template <class Integrand>
double integrate_supported(const TriMesh& mesh, std::initializer_list<Disk> disks, Integrand f) {
    double r_min = std::numeric_limits<double>::infinity();
    for (const auto& d : disks) r_min = std::min(r_min, d.radius);
    auto inside = [&](const Vec2& x) {
        for (const auto& d : disks)
            if ((x - d.center).squaredNorm() >= d.radius * d.radius) return false;
        return true;
    };
    double total = 0.0;
    const auto& vs = mesh.vertices();
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles()[static_cast<std::size_t>(t)];
        const Vec2& p0 = vs[static_cast<std::size_t>(tri[0])];
        const Vec2& p1 = vs[static_cast<std::size_t>(tri[1])];
        const Vec2& p2 = vs[static_cast<std::size_t>(tri[2])];
        const Vec2 c = (p0 + p1 + p2) / 3.0;
        const double reach = std::max({(p0 - c).norm(), (p1 - c).norm(), (p2 - c).norm()});
        bool touches = true;
        for (const auto& d : disks) touches = touches && (c - d.center).norm() < d.radius + reach;
        if (!touches) continue;

        const double diam = std::max({(p1 - p0).norm(), (p2 - p1).norm(), (p0 - p2).norm()});
        const int s = std::max(1, static_cast<int>(std::ceil(kPieceScale * diam / (r_min * mesh.h()))));
        const Vec2 e1 = (p1 - p0) / s;
        const Vec2 e2 = (p2 - p0) / s;
        const double piece_area = mesh.area(t) / (static_cast<double>(s) * s);
        double sum = 0.0;
        auto piece = [&](const Vec2& a, const Vec2& b, const Vec2& d) {
            for (const auto& n : kRule) {
                const Vec2 x = n.l0 * a + n.l1 * b + n.l2 * d;
                if (!inside(x)) continue;
                const double v = f(x);
                if (!std::isfinite(v)) {
                    std::ostringstream os;
                    os << "non-finite integrand in triangle " << t << " at (" << x(0) << ", " << x(1) << ")";
                    throw QuadratureError(os.str());
                }
                sum += n.w * v;
            }
        };
        for (int i = 0; i < s; ++i)
            for (int j = 0; i + j < s; ++j) {
                const Vec2 a = p0 + i * e1 + j * e2;
                piece(a, a + e1, a + e2);
                if (i + j + 2 <= s) piece(a + e1, a + e1 + e2, a + e2);
            }
        total += sum * piece_area;
    }
    return total;
}

Vec2 planar(const Point& p) { return {p(0), p(1)}; }

double generator(const Matrix& a, const Vec2& drift, const TestFunction& phi, const Vec2& x) {
    const Eigen::Matrix2d hess = phi.hessian(x);
    return 0.5 * (a.topLeftCorner<2, 2>().cwiseProduct(hess)).sum() + drift.dot(phi.gradient(x));
}

} // namespace

double invariance_residual(const CoefficientSet& cs, const ScalarField& rho, const TestFunction& phi,
                           const TriMesh& mesh) {
    require_planar(cs, "invariance_residual");
    require_inside(phi, mesh, "invariance_residual");
    return integrate_supported(
        mesh, {disk_of(phi)},
        [&](const Vec2& x) {
            const Point p = embed(x, 2);
            const Vec2 g = planar(drift_G(cs, p, SingularPolicy::accept).value);
            return generator(cs.A()(p), g, phi, x) * rho(p);
        });
}

double divfree_residual(const PointwiseVector& b, const ScalarField& rho, const TestFunction& phi,
                        const TriMesh& mesh) {
    require_inside(phi, mesh, "divfree_residual");
    return integrate_supported(
        mesh, {disk_of(phi)},
        [&](const Vec2& x) {
            const Point p = embed(x, 2);
            return planar(b(p)).dot(phi.gradient(x)) * rho(p);
        });
}

double dirichlet_form(const CoefficientSet& cs, const ScalarField& rho, const TestFunction& f,
                      const TestFunction& g, const TriMesh& mesh) {
    require_planar(cs, "dirichlet_form");
    require_inside(f, mesh, "dirichlet_form");
    require_inside(g, mesh, "dirichlet_form");
    return integrate_supported(
        mesh, {disk_of(f), disk_of(g)},
        [&](const Vec2& x) {
            const Point p = embed(x, 2);
            const auto d = derived_drifts(cs, rho, p, SingularPolicy::accept);
            const Matrix ac = cs.A()(p) + cs.C()(p);
            const Vec2 gf = f.gradient(x);
            const Vec2 gg = g.gradient(x);
            const double sym = 0.5 * (ac.topLeftCorner<2, 2>() * gf).dot(gg);
            return (sym - planar(d.Bbar).dot(gf) * g.value(x)) * rho(p);
        });
}

std::pair<double, double> adjoint_gap(const CoefficientSet& cs, const ScalarField& rho, const TestFunction& f,
                                      const TestFunction& g, const TriMesh& mesh) {
    const double e = dirichlet_form(cs, rho, f, g, mesh);
    const double lf_g = integrate_supported(
        mesh, {disk_of(f), disk_of(g)},
        [&](const Vec2& x) {
            const Point p = embed(x, 2);
            const Vec2 drift = planar(drift_G(cs, p, SingularPolicy::accept).value);
            return generator(cs.A()(p), drift, f, x) * g.value(x) * rho(p);
        });
    const double f_lhat_g = integrate_supported(
        mesh, {disk_of(f), disk_of(g)},
        [&](const Vec2& x) {
            const Point p = embed(x, 2);
            const auto d = derived_drifts(cs, rho, p, SingularPolicy::accept);
            return f.value(x) * generator(cs.A()(p), planar(d.Ghat), g, x) * rho(p);
        });
    return {e + lf_g, e + f_lhat_g};
}

} // namespace invmeas
