#pragma once

#include "invmeas/coefficients.hpp"
#include "invmeas/mesh.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace invmeas {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

/// P1 nodal function on a TriMesh.
class FemFunction {
public:
    FemFunction(std::shared_ptr<const TriMesh> mesh, Eigen::VectorXd values);

    const TriMesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const TriMesh>& mesh_ptr() const { return mesh_; }
    const Eigen::VectorXd& values() const { return values_; }

    /// Barycentric interpolation; throws MeshError outside the disk.
    double operator()(const Vec2& p) const;
    double at(int triangle, const Eigen::Vector3d& bary) const;
    Vec2 triangle_gradient(int triangle) const;

    /// CSV "vertex_index,x,y,value" for vertices with |x| <= r_max.
    void write_csv(std::ostream& os, double r_max = std::numeric_limits<double>::infinity()) const;

private:
    std::shared_ptr<const TriMesh> mesh_;
    Eigen::VectorXd values_;
};

struct LinearSystem {
    SparseMatrix matrix;
    Eigen::VectorXd rhs;
    /// Constrained vertex -> prescribed value; those rows are identity rows.
    std::map<int, double> dirichlet;
    std::shared_ptr<const TriMesh> mesh;
};

struct AssemblyOptions {
    unsigned workers = 0;
};

/// Assembles
///   a(u, phi) = int <1/2 (A + C^T) grad u - u H, grad phi> dx + alpha int u phi dx,
///   rhs(phi)  = int <H, grad phi> dx,
/// on P1 hat functions with homogeneous Dirichlet rows on the boundary.
/// Requires a two-dimensional coefficient set.
LinearSystem assemble_ball_form(const CoefficientSet& cs, std::shared_ptr<const TriMesh> mesh, double alpha,
                                const AssemblyOptions& options = {});

struct SolverOptions {
    /// Systems with fewer unknowns go to the sparse direct solver.
    Eigen::Index direct_threshold = 20000;
    int max_iterations = 10000;
    /// Residual acceptance: |Ax - b| <= min(tolerance * (1 + |b| + | |A| |x| |), forward_cap * (1 + |b|)).
    double tolerance = 1e-8;
    /// Rejects inconsistent singular systems, whose backward-error scale grows with |x|.
    double forward_cap = 1e-2;
};

struct SolveInfo {
    std::string method;
    int iterations = 0;
    double residual = 0.0;
    /// Right-hand side of the acceptance test the residual was compared with.
    double residual_bound = 0.0;
};

/// Solves a square sparse system: sparse LU below the direct threshold,
/// otherwise BiCGSTAB with an incomplete LUT preconditioner. Throws
/// SolverError (carrying the final residual) on failure.
Eigen::VectorXd solve_linear(const SparseMatrix& matrix, const Eigen::VectorXd& rhs, SolveInfo* info = nullptr,
                             const SolverOptions& options = {});

FemFunction solve(const LinearSystem& system, SolveInfo* info = nullptr, const SolverOptions& options = {});

/// One node of the composite 3-point Gauss rule.
struct QuadPoint {
    Vec2 x;
    int triangle;
    Eigen::Vector3d bary;
    double weight;
};

/// Visits every quadrature node in triangle order (3 nodes per triangle).
void for_each_quad_point(const TriMesh& mesh, const std::function<void(const QuadPoint&)>& fn);

/// Composite 3-point Gauss rule (exact for quadratics on each triangle).
/// Throws QuadratureError naming the triangle of a non-finite node value.
double integrate(const TriMesh& mesh, const std::function<double(const QuadPoint&)>& f);
double integrate(const TriMesh& mesh, const std::function<double(const Vec2&)>& f);

/// Vertex gradients: area-weighted average of adjacent element gradients.
std::vector<Vec2> gradient_recover(const FemFunction& u);

/// Wraps a P1 function and its recovered gradient as a ScalarField on R^2.
/// Evaluation with |x| > r_max throws MeshError.
ScalarField fem_scalar_field(const FemFunction& u, double r_max = std::numeric_limits<double>::infinity());

} // namespace invmeas
