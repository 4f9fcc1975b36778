#include "invmeas/coefficients.hpp"

#include "invmeas/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace invmeas {

namespace {

std::string format_point(const Point& x) {
    std::ostringstream os;
    os.precision(10);
    os << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
    os << ')';
    return os.str();
}

bool gradient_singular(const CoefficientSet& cs, const Point& x) {
    return cs.A().gradient_singular_at(x) || cs.C().gradient_singular_at(x);
}

// Visits every lattice point k * step, k in Z^d, inside the closed ball.
template <class Fn>
void for_each_lattice_point(int dim, double radius, double step, Fn&& fn) {
    const long n = static_cast<long>(std::floor(radius / step + 1e-9));
    std::vector<long> idx(static_cast<std::size_t>(dim), -n);
    Point x(dim);
    const double r2 = radius * radius * (1.0 + 1e-12);
    while (true) {
        for (int i = 0; i < dim; ++i) x(i) = static_cast<double>(idx[static_cast<std::size_t>(i)]) * step;
        if (x.squaredNorm() <= r2) {
            if (!fn(x)) return;
        }
        int k = 0;
        while (k < dim && ++idx[static_cast<std::size_t>(k)] > n) idx[static_cast<std::size_t>(k++)] = -n;
        if (k == dim) return;
    }
}

} // namespace

CoefficientSet::CoefficientSet(std::string name, MatrixField A, MatrixField C, VectorField H,
                               double p_exponent)
    : name_(std::move(name)), A_(std::move(A)), C_(std::move(C)), H_(std::move(H)), p_(p_exponent) {
    const int d = A_.dim();
    if (C_.dim() != d || H_.dim() != d)
        throw CoefficientError("coefficient set '" + name_ + "': dimension mismatch between A, C and H");
    if (A_.symmetry() != Symmetry::symmetric)
        throw CoefficientError("coefficient set '" + name_ + "': A must be declared symmetric");
    if (C_.symmetry() != Symmetry::antisymmetric)
        throw CoefficientError("coefficient set '" + name_ + "': C must be declared antisymmetric");
    if (!(p_ > d))
        throw CoefficientError("coefficient set '" + name_ + "': integrability exponent p must exceed d");
}

bool CoefficientSet::has_singularities() const {
    return A_.gradient_singularity().has_value() || C_.gradient_singularity().has_value() ||
           H_.singular_support().has_value();
}

ValidationReport validate_coefficients(const CoefficientSet& cs, double radius, double grid_step) {
    if (!(radius > 0.0)) throw std::invalid_argument("validate_coefficients: radius must be positive");
    if (!(grid_step > 0.0)) throw std::invalid_argument("validate_coefficients: grid_step must be positive");

    ValidationReport report;
    report.lambda_B = std::numeric_limits<double>::infinity();
    report.Lambda_B = -std::numeric_limits<double>::infinity();
    if (cs.uses_finite_differences()) report.fd_step_at_origin = fd_step(zero_point(cs.dim()));

    for_each_lattice_point(cs.dim(), radius, grid_step, [&](const Point& x) {
        const Matrix a = cs.A()(x);
        const Matrix c = cs.C()(x);
        if (!a.allFinite() || !c.allFinite()) {
            report.failure = "non-finite coefficient entry at " + format_point(x);
            return false;
        }
        ++report.points_checked;
        if (a != a.transpose()) report.symmetry_ok = false;
        if (c != Matrix(-c.transpose())) report.antisymmetry_ok = false;

        Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
        report.lambda_B = std::min(report.lambda_B, eig.eigenvalues().minCoeff());
        report.Lambda_B = std::max(report.Lambda_B, eig.eigenvalues().maxCoeff());
        return true;
    });
    return report;
}

Flagged<Point> drift_G(const CoefficientSet& cs, const Point& x, SingularPolicy policy) {
    const bool singular = gradient_singular(cs, x) || cs.H().singular_at(x);
    if (singular && policy == SingularPolicy::refuse)
        throw SingularityRefused("drift G requested inside a declared singularity at " + format_point(x));
    Point g = 0.5 * (cs.A().divergence(x) + cs.C().transpose_divergence(x)) + cs.H()(x);
    return {g, singular};
}

Point log_derivative(const MatrixField& M, const ScalarField& rho, const Point& x, SingularPolicy policy) {
    const double r = rho(x);
    if (!(r > 0.0))
        throw CoefficientError("log_derivative: density is not positive at " + format_point(x));
    if (policy == SingularPolicy::refuse && M.gradient_singular_at(x))
        throw SingularityRefused("log_derivative requested inside a declared singularity at " +
                                 format_point(x));
    return 0.5 * (M.divergence(x) + M(x) * rho.grad(x) / r);
}

DerivedDrifts derived_drifts(const CoefficientSet& cs, const ScalarField& rho, const Point& x,
                             SingularPolicy policy) {
    const double r = rho(x);
    if (!(r > 0.0))
        throw CoefficientError("derived_drifts: density is not positive at " + format_point(x));
    const auto g = drift_G(cs, x, policy);

    const Point grad_log = rho.grad(x) / r;
    const Matrix a = cs.A()(x);
    const Matrix c = cs.C()(x);
    const Point div_a = cs.A().divergence(x);
    const Point div_c = cs.C().divergence(x);
    const Point div_ct = cs.C().transpose_divergence(x);

    DerivedDrifts out;
    out.singular = g.singular;
    out.G = g.value;
    out.beta_A = 0.5 * (div_a + a * grad_log);
    const Point beta_ct = 0.5 * (div_ct + Matrix(c.transpose()) * grad_log);
    out.beta_ACt = out.beta_A + beta_ct;
    out.Bbar = out.G - out.beta_ACt;
    out.Ghat = 2.0 * out.beta_A - out.G;
    out.Fhat = 0.5 * (div_a + div_c) - out.Ghat;
    return out;
}

Point divergence_free_drift(const CoefficientSet& cs, const ScalarField& rho, const Point& x,
                            SingularPolicy policy) {
    const auto d = derived_drifts(cs, rho, x, policy);
    return d.G - d.beta_A;
}

} // namespace invmeas
