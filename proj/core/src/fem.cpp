#include "invmeas/fem.hpp"

#include "invmeas/csv.hpp"
#include "invmeas/error.hpp"
#include "invmeas/parallel.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <cmath>
#include <cstdio>
#include <ostream>

namespace invmeas {

namespace {

constexpr double kGaussMajor = 2.0 / 3.0;
constexpr double kGaussMinor = 1.0 / 6.0;

const std::array<Eigen::Vector3d, 3>& gauss_barycentrics() {
    static const std::array<Eigen::Vector3d, 3> nodes = {
        Eigen::Vector3d(kGaussMajor, kGaussMinor, kGaussMinor),
        Eigen::Vector3d(kGaussMinor, kGaussMajor, kGaussMinor),
        Eigen::Vector3d(kGaussMinor, kGaussMinor, kGaussMajor),
    };
    return nodes;
}

Vec2 node_position(const TriMesh& mesh, int t, const Eigen::Vector3d& l) {
    const auto& tri = mesh.triangles()[static_cast<std::size_t>(t)];
    return l(0) * mesh.vertices()[static_cast<std::size_t>(tri[0])] +
           l(1) * mesh.vertices()[static_cast<std::size_t>(tri[1])] +
           l(2) * mesh.vertices()[static_cast<std::size_t>(tri[2])];
}

} // namespace

FemFunction::FemFunction(std::shared_ptr<const TriMesh> mesh, Eigen::VectorXd values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
    if (!mesh_) throw MeshError("FemFunction: null mesh");
    if (values_.size() != mesh_->num_vertices()) throw MeshError("FemFunction: one value per vertex required");
}

double FemFunction::operator()(const Vec2& p) const {
    const auto loc = mesh_->locate(p);
    if (!loc) throw MeshError("FemFunction evaluated outside the mesh disk");
    return at(loc->triangle, loc->bary);
}

double FemFunction::at(int triangle, const Eigen::Vector3d& bary) const {
    const auto& tri = mesh_->triangles()[static_cast<std::size_t>(triangle)];
    return bary(0) * values_(tri[0]) + bary(1) * values_(tri[1]) + bary(2) * values_(tri[2]);
}

Vec2 FemFunction::triangle_gradient(int triangle) const {
    const auto g = mesh_->hat_gradients(triangle);
    const auto& tri = mesh_->triangles()[static_cast<std::size_t>(triangle)];
    return values_(tri[0]) * g[0] + values_(tri[1]) * g[1] + values_(tri[2]) * g[2];
}

void FemFunction::write_csv(std::ostream& os, double r_max) const {
    os << "vertex_index,x,y,value\n";
    char buf[128];
    const double r2 = r_max * r_max * (1.0 + 1e-12);
    for (int v = 0; v < mesh_->num_vertices(); ++v) {
        const Vec2& x = mesh_->vertices()[static_cast<std::size_t>(v)];
        if (x.squaredNorm() > r2) continue;
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", v, x(0), x(1), values_(v));
        os << buf;
    }
}

LinearSystem assemble_ball_form(const CoefficientSet& cs, std::shared_ptr<const TriMesh> mesh, double alpha,
                                const AssemblyOptions& options) {
    if (cs.dim() != 2) throw CoefficientError("assemble_ball_form: the finite element layer is two-dimensional");
    if (!(alpha >= 0.0)) throw std::invalid_argument("assemble_ball_form: alpha must be non-negative");
    const TriMesh& m = *mesh;
    const auto nt = static_cast<std::size_t>(m.num_triangles());

    std::vector<Eigen::Matrix3d> local(nt);
    std::vector<Eigen::Vector3d> local_rhs(nt);
    parallel_for(nt, options.workers, [&](std::size_t ti) {
        const int t = static_cast<int>(ti);
        const auto grads = m.hat_gradients(t);
        const double w = m.area(t) / 3.0;
        Eigen::Matrix3d k = Eigen::Matrix3d::Zero();
        Eigen::Vector3d f = Eigen::Vector3d::Zero();
        for (const auto& l : gauss_barycentrics()) {
            const Point x = embed(node_position(m, t, l), 2);
            const Matrix a = cs.A()(x);
            const Matrix c = cs.C()(x);
            const Eigen::Matrix2d kc = 0.5 * (a + c.transpose());
            const Point hx = cs.H()(x);
            const Vec2 hv(hx(0), hx(1));
            for (int i = 0; i < 3; ++i) {
                const double h_dot = hv.dot(grads[static_cast<std::size_t>(i)]);
                f(i) += w * h_dot;
                for (int j = 0; j < 3; ++j) {
                    k(i, j) += w * ((kc * grads[static_cast<std::size_t>(j)]).dot(grads[static_cast<std::size_t>(i)]) -
                                    l(j) * h_dot + alpha * l(i) * l(j));
                }
            }
        }
        if (!k.allFinite() || !f.allFinite())
            throw QuadratureError("assemble_ball_form: non-finite contribution on triangle " + std::to_string(t));
        local[ti] = k;
        local_rhs[ti] = f;
    });

    const auto nv = static_cast<Eigen::Index>(m.num_vertices());
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(9 * nt);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv);
    for (std::size_t ti = 0; ti < nt; ++ti) {
        const auto& tri = m.triangles()[ti];
        for (int i = 0; i < 3; ++i) {
            if (m.is_boundary(tri[static_cast<std::size_t>(i)])) continue;
            rhs(tri[static_cast<std::size_t>(i)]) += local_rhs[ti](i);
            for (int j = 0; j < 3; ++j)
                triplets.emplace_back(tri[static_cast<std::size_t>(i)], tri[static_cast<std::size_t>(j)],
                                      local[ti](i, j));
        }
    }
    LinearSystem sys;
    sys.mesh = std::move(mesh);
    for (int b : sys.mesh->boundary_vertices()) {
        triplets.emplace_back(b, b, 1.0);
        rhs(b) = 0.0;
        sys.dirichlet.emplace(b, 0.0);
    }
    sys.matrix.resize(nv, nv);
    sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
    sys.matrix.makeCompressed();
    sys.rhs = std::move(rhs);
    return sys;
}

namespace {

// tolerance * (1 + |b| + | |A| |x| |), the normwise backward-error scale of the
// residual, capped at forward_cap * (1 + |b|). The cap rejects inconsistent
// singular systems, where |x| grows until the backward-error scale alone passes.
double residual_bound(const SparseMatrix& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b,
                      const SolverOptions& o) {
    Eigen::VectorXd ax = Eigen::VectorXd::Zero(a.rows());
    for (Eigen::Index k = 0; k < a.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) ax(it.row()) += std::abs(it.value() * x(it.col()));
    return std::min(o.tolerance * (1.0 + b.norm() + ax.norm()), o.forward_cap * (1.0 + b.norm()));
}

} // namespace

Eigen::VectorXd solve_linear(const SparseMatrix& matrix, const Eigen::VectorXd& rhs, SolveInfo* info,
                             const SolverOptions& options) {
    if (matrix.rows() != matrix.cols() || matrix.rows() != rhs.size())
        throw SolverError("solve_linear: dimension mismatch", std::nan(""), 0);
    SolveInfo local;
    Eigen::VectorXd x;
    auto check = [&](const Eigen::VectorXd& y) {
        if (!y.allFinite()) {
            local.residual = std::numeric_limits<double>::infinity();
            local.residual_bound = 0.0;
            return false;
        }
        local.residual = (matrix * y - rhs).norm();
        local.residual_bound = residual_bound(matrix, y, rhs, options);
        return local.residual <= local.residual_bound;
    };

    bool converged = false;
    if (matrix.rows() < options.direct_threshold) {
        local.method = "sparse-lu";
        Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
        lu.analyzePattern(matrix);
        lu.factorize(matrix);
        if (lu.info() != Eigen::Success)
            throw SolverError("solve_linear: sparse LU factorization failed (" + lu.lastErrorMessage() + ")",
                              std::numeric_limits<double>::infinity(), 0);
        x = lu.solve(rhs);
        local.iterations = 1;
        converged = check(x);
    } else {
        local.method = "bicgstab-ilut";
        Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> solver;
        solver.preconditioner().setDroptol(1e-6);
        solver.preconditioner().setFillfactor(20);
        solver.setTolerance(1e-15);
        solver.compute(matrix);
        if (solver.info() != Eigen::Success)
            throw SolverError("solve_linear: incomplete LUT preconditioner failed",
                              std::numeric_limits<double>::infinity(), 0);
        // Iterate in short chunks so the residual test decides when to stop.
        constexpr int kChunk = 20;
        x = Eigen::VectorXd::Zero(rhs.size());
        while (local.iterations < options.max_iterations) {
            solver.setMaxIterations(std::min(kChunk, options.max_iterations - local.iterations));
            x = solver.solveWithGuess(rhs, x);
            local.iterations += std::max<int>(1, static_cast<int>(solver.iterations()));
            if ((converged = check(x))) break;
        }
    }
    if (info) *info = local;
    if (!converged)
        throw SolverError("solve_linear: " + local.method + " did not reach the residual bound (residual " +
                              format_double(local.residual) + ", bound " + format_double(local.residual_bound) +
                              ")",
                          local.residual, local.iterations);
    return x;
}

FemFunction solve(const LinearSystem& system, SolveInfo* info, const SolverOptions& options) {
    if (!system.mesh) throw SolverError("solve: system carries no mesh", std::nan(""), 0);
    return FemFunction(system.mesh, solve_linear(system.matrix, system.rhs, info, options));
}

void for_each_quad_point(const TriMesh& mesh, const std::function<void(const QuadPoint&)>& fn) {
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const double w = mesh.area(t) / 3.0;
        for (const auto& l : gauss_barycentrics()) fn(QuadPoint{node_position(mesh, t, l), t, l, w});
    }
}

double integrate(const TriMesh& mesh, const std::function<double(const QuadPoint&)>& f) {
    double sum = 0.0;
    double comp = 0.0;
    for_each_quad_point(mesh, [&](const QuadPoint& q) {
        const double v = f(q);
        if (!std::isfinite(v))
            throw QuadratureError("integrate: non-finite integrand on triangle " + std::to_string(q.triangle));
        // Neumaier summation keeps symmetric cancellations at round-off level.
        const double term = q.weight * v;
        const double t = sum + term;
        comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
        sum = t;
    });
    return sum + comp;
}

double integrate(const TriMesh& mesh, const std::function<double(const Vec2&)>& f) {
    return integrate(mesh, [&f](const QuadPoint& q) { return f(q.x); });
}

std::vector<Vec2> gradient_recover(const FemFunction& u) {
    const TriMesh& m = u.mesh();
    std::vector<Vec2> grad(static_cast<std::size_t>(m.num_vertices()), Vec2::Zero());
    std::vector<double> weight(static_cast<std::size_t>(m.num_vertices()), 0.0);
    for (int t = 0; t < m.num_triangles(); ++t) {
        const Vec2 g = u.triangle_gradient(t);
        const double a = m.area(t);
        for (int v : m.triangles()[static_cast<std::size_t>(t)]) {
            grad[static_cast<std::size_t>(v)] += a * g;
            weight[static_cast<std::size_t>(v)] += a;
        }
    }
    for (std::size_t v = 0; v < grad.size(); ++v)
        if (weight[v] > 0.0) grad[v] /= weight[v];
    return grad;
}

ScalarField fem_scalar_field(const FemFunction& u, double r_max) {
    auto fn = std::make_shared<const FemFunction>(u);
    auto vertex_grad = std::make_shared<const std::vector<Vec2>>(gradient_recover(u));
    const double r2 = r_max * r_max * (1.0 + 1e-12);
    auto locate = [fn, r2](const Point& x) {
        const Vec2 p(x(0), x(1));
        if (p.squaredNorm() > r2) throw MeshError("density evaluated outside its observation disk");
        const auto loc = fn->mesh().locate(p);
        if (!loc) throw MeshError("density evaluated outside the mesh disk");
        return *loc;
    };
    return ScalarField(
        2, [fn, locate](const Point& x) {
            const auto loc = locate(x);
            return fn->at(loc.triangle, loc.bary);
        },
        [fn, vertex_grad, locate](const Point& x) -> Point {
            const auto loc = locate(x);
            const auto& tri = fn->mesh().triangles()[static_cast<std::size_t>(loc.triangle)];
            Vec2 g = Vec2::Zero();
            for (int k = 0; k < 3; ++k)
                g += loc.bary(k) * (*vertex_grad)[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])];
            return embed(g, 2);
        });
}

} // namespace invmeas
