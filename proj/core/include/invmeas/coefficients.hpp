#pragma once

#include "invmeas/fields.hpp"

#include <optional>
#include <string>

namespace invmeas {

/// Pointwise decomposition used by the growth hypothesis of the moment bound:
/// max|sigma_ij| <= |h1| + C (sqrt|x| + 1) and max|g_i| <= |h2| + C (|x| + 1).
struct GrowthDecomposition {
    ScalarField h1;
    ScalarField h2;
    double C;
};

/// The coefficient triple (A, C, H) of the divergence-form operator
///   L f = 1/2 div((A + C) grad f) + <H, grad f>
/// with A symmetric, C antisymmetric and H in L^p_loc for some p > d.
class CoefficientSet {
public:
    CoefficientSet(std::string name, MatrixField A, MatrixField C, VectorField H, double p_exponent);

    const std::string& name() const { return name_; }
    int dim() const { return A_.dim(); }
    const MatrixField& A() const { return A_; }
    const MatrixField& C() const { return C_; }
    const VectorField& H() const { return H_; }
    double p_exponent() const { return p_; }
    /// q = p d / (p + d); always satisfies q < d < p.
    double q_exponent() const { return p_ * dim() / (p_ + dim()); }

    bool has_singularities() const;
    bool uses_finite_differences() const {
        return A_.uses_finite_differences() || C_.uses_finite_differences();
    }

    /// Known infinitesimally invariant density, when the set has one in closed form.
    std::optional<ScalarField> reference_density;
    std::optional<GrowthDecomposition> growth;

private:
    std::string name_;
    MatrixField A_;
    MatrixField C_;
    VectorField H_;
    double p_;
};

enum class SingularPolicy { refuse, accept };

struct ValidationReport {
    double lambda_B = 0.0;
    double Lambda_B = 0.0;
    bool symmetry_ok = true;
    bool antisymmetry_ok = true;
    std::size_t points_checked = 0;
    /// Non-empty when a non-finite entry was met; names the point.
    std::string failure;
    /// Non-zero when divergences fall back to central differences.
    double fd_step_at_origin = 0.0;

    bool ok() const { return failure.empty() && lambda_B > 0.0 && symmetry_ok && antisymmetry_ok; }
};

/// Checks ellipticity and the symmetry structure of (A, C) on the lattice of
/// spacing grid_step inside the closed ball of the given radius. lambda_B and
/// Lambda_B are the extreme eigenvalues of A over the lattice.
ValidationReport validate_coefficients(const CoefficientSet& cs, double radius, double grid_step);

/// G = 1/2 grad(A + C^T) + H.
Flagged<Point> drift_G(const CoefficientSet& cs, const Point& x,
                       SingularPolicy policy = SingularPolicy::refuse);

/// beta^{rho,M} = 1/2 (grad M + M grad(rho) / rho).
Point log_derivative(const MatrixField& M, const ScalarField& rho, const Point& x,
                     SingularPolicy policy = SingularPolicy::refuse);

struct DerivedDrifts {
    Point G;
    Point beta_A;
    Point beta_ACt;
    Point Bbar;
    Point Ghat;
    Point Fhat;
    bool singular = false;
};

DerivedDrifts derived_drifts(const CoefficientSet& cs, const ScalarField& rho, const Point& x,
                             SingularPolicy policy = SingularPolicy::refuse);

/// beta^{rho,C^T} + Bbar = G - beta^{rho,A}: the drift that must be weakly
/// divergence free with respect to rho dx.
Point divergence_free_drift(const CoefficientSet& cs, const ScalarField& rho, const Point& x,
                            SingularPolicy policy = SingularPolicy::refuse);

} // namespace invmeas
