#include "invmeas/examples.hpp"

#include "invmeas/error.hpp"

#include <cmath>
#include <limits>

namespace invmeas {

namespace infsin {

namespace {

constexpr double kBumpRadius = 0.25;
constexpr double kSingularTolerance = 1e-12;

// Index of the shifted bump whose support may contain x, or -1.
int active_copy(const Point& x) {
    const double i = std::round(x(0));
    if (i < 0.0 || i >= series_terms()) return -1;
    Point y = x;
    y(0) -= i;
    return y.squaredNorm() < kBumpRadius * kBumpRadius ? static_cast<int>(i) : -1;
}

} // namespace

int series_terms() {
    // keep i while 2^{-i} >= 1e-12
    int n = 0;
    while (std::ldexp(1.0, -n) >= 1e-12) ++n;
    return n;
}

double eta(const Point& x) {
    const double u = 16.0 * x.squaredNorm();
    if (u >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - u));
}

Point grad_eta(const Point& x) {
    const double u = 16.0 * x.squaredNorm();
    if (u >= 1.0) return zero_point(static_cast<int>(x.size()));
    const double e = std::exp(1.0 - 1.0 / (1.0 - u));
    return (-32.0 * e / ((1.0 - u) * (1.0 - u))) * x;
}

double antiderivative(double s, int dim) {
    const double kappa = 1.0 - 1.0 / dim;
    if (s <= -1.0) return 0.0;
    if (s >= 1.0) return 2.0 / kappa;
    const double a = std::pow(std::abs(s), kappa);
    return s <= 0.0 ? (1.0 - a) / kappa : (1.0 + a) / kappa;
}

double antiderivative_slope(double s, int dim) {
    if (s < -1.0 || s > 1.0) return 0.0;
    if (s == 0.0) return std::numeric_limits<double>::infinity();
    return std::pow(std::abs(s), -1.0 / dim);
}

double w(const Point& x) {
    const double e = eta(x);
    if (e == 0.0) return 0.0;
    return e * antiderivative(x(0), static_cast<int>(x.size()));
}

Point grad_w(const Point& x) {
    const int dim = static_cast<int>(x.size());
    const double e = eta(x);
    if (e == 0.0) return zero_point(dim);
    Point g = grad_eta(x) * antiderivative(x(0), dim);
    g(0) += e * antiderivative_slope(x(0), dim);
    return g;
}

double v(const Point& x) {
    const int i = active_copy(x);
    if (i < 0) return 0.0;
    Point y = x;
    y(0) -= i;
    return std::ldexp(w(y), -i);
}

Point grad_v(const Point& x) {
    const int i = active_copy(x);
    if (i < 0) return zero_point(static_cast<int>(x.size()));
    Point y = x;
    y(0) -= i;
    return std::ldexp(1.0, -i) * grad_w(y);
}

bool on_singular_line(const Point& x) {
    const int i = active_copy(x);
    return i >= 0 && std::abs(x(0) - i) <= kSingularTolerance;
}

} // namespace infsin

namespace {

void require_dim(int dim, const std::string& name) {
    if (dim < 2 || dim > kMaxDim)
        throw CoefficientError("example '" + name + "': dimension must lie in [2, " +
                               std::to_string(kMaxDim) + "]");
}

double smooth_p(int dim) { return 2.0 * dim; }

// C with c_{1d} = v, c_{d1} = -v and every other entry zero.
MatrixField singular_antisymmetric(int dim) {
    const int last = dim - 1;
    auto eval = [dim, last](const Point& x) -> Matrix {
        Matrix m = Matrix::Zero(dim, dim);
        const double vx = infsin::v(x);
        m(0, last) = vx;
        m(last, 0) = -vx;
        return m;
    };
    auto div = [dim, last](const Point& x) -> Point {
        const Point gv = infsin::grad_v(x);
        Point out = zero_point(dim);
        out(0) = gv(last);
        out(last) = -gv(0);
        return out;
    };
    MatrixField c(dim, Symmetry::antisymmetric, eval, div);
    return c.with_singular_gradient(
        {"segments x1 = i (i = 0.." + std::to_string(infsin::series_terms() - 1) +
             ") inside the bumps of radius 1/4 centred at i e1",
         [](const Point& x) { return infsin::on_singular_line(x); }});
}

ScalarField zero_scalar(int dim) { return ScalarField::constant(dim, 0.0); }

// max_i |1/2 (grad C^T)_i| for the singular antisymmetric part.
ScalarField singular_drift_norm(int dim) {
    return ScalarField(dim, [dim](const Point& x) {
        const Point gv = infsin::grad_v(x);
        return 0.5 * std::max(std::abs(gv(dim - 1)), std::abs(gv(0)));
    });
}

CoefficientSet make_identity(const ExampleParams& p) {
    require_dim(p.dim, "identity");
    CoefficientSet cs("identity", MatrixField::identity(p.dim), MatrixField::zero(p.dim, Symmetry::antisymmetric),
                      VectorField::zero(p.dim), smooth_p(p.dim));
    cs.reference_density = ScalarField::constant(p.dim, 1.0);
    cs.growth = GrowthDecomposition{zero_scalar(p.dim), zero_scalar(p.dim), 1.0};
    return cs;
}

CoefficientSet make_ou(const ExampleParams& p) {
    require_dim(p.dim, "ou");
    if (!(p.diffusion > 0.0) || !(p.theta > 0.0))
        throw CoefficientError("example 'ou': diffusion and theta must be positive");
    const int dim = p.dim;
    const double a = p.diffusion;
    const double theta = p.theta;
    MatrixField A = a == 1.0 ? MatrixField::identity(dim)
                             : MatrixField::constant(a * Matrix::Identity(dim, dim), Symmetry::symmetric);
    VectorField H(dim, [theta](const Point& x) -> Point { return -theta * x; });
    CoefficientSet cs("ou", std::move(A), MatrixField::zero(dim, Symmetry::antisymmetric), std::move(H),
                      smooth_p(dim));
    const double k = theta / a;
    cs.reference_density = ScalarField(
        dim, [k](const Point& x) { return std::exp(-k * x.squaredNorm()); },
        [k](const Point& x) -> Point { return (-2.0 * k * std::exp(-k * x.squaredNorm())) * x; });
    cs.growth = GrowthDecomposition{zero_scalar(dim), zero_scalar(dim),
                                    std::max({1.0, theta, std::sqrt(a)})};
    return cs;
}

CoefficientSet make_infsin(const ExampleParams& p) {
    require_dim(p.dim, "infsin");
    const int dim = p.dim;
    CoefficientSet cs("infsin", MatrixField::identity(dim), singular_antisymmetric(dim), VectorField::zero(dim),
                      smooth_p(dim));
    cs.reference_density = ScalarField::constant(dim, 1.0);
    cs.growth = GrowthDecomposition{zero_scalar(dim), singular_drift_norm(dim), 1.0};
    return cs;
}

CoefficientSet make_growth_demo(const ExampleParams& p) {
    require_dim(p.dim, "growth-demo");
    if (!(p.diffusion > 0.0)) throw CoefficientError("example 'growth-demo': diffusion must be positive");
    const int dim = p.dim;
    const double a = p.diffusion;
    const double theta = p.theta;
    MatrixField A(
        dim, Symmetry::symmetric,
        [dim, a](const Point& x) -> Matrix {
            return (a * std::sqrt(1.0 + x.squaredNorm())) * Matrix::Identity(dim, dim);
        },
        [a](const Point& x) -> Point { return (a / std::sqrt(1.0 + x.squaredNorm())) * x; });
    VectorField H(dim, [dim, theta](const Point& x) -> Point {
        Point h = zero_point(dim);
        h(0) = -theta * x(1);
        h(1) = theta * x(0);
        return h;
    });
    CoefficientSet cs("growth-demo", std::move(A), singular_antisymmetric(dim), std::move(H), smooth_p(dim));
    // div H = 0, so Lebesgue measure is infinitesimally invariant.
    cs.reference_density = ScalarField::constant(dim, 1.0);
    cs.growth = GrowthDecomposition{zero_scalar(dim), singular_drift_norm(dim),
                                    std::max({1.0, 0.5 * a, std::abs(theta), std::sqrt(a)})};
    return cs;
}

} // namespace

std::vector<std::string> example_names() { return {"identity", "ou", "infsin", "growth-demo"}; }

CoefficientSet example(const std::string& name, const ExampleParams& params) {
    if (name == "identity") return make_identity(params);
    if (name == "ou") return make_ou(params);
    if (name == "infsin") return make_infsin(params);
    if (name == "growth-demo") return make_growth_demo(params);
    std::string list;
    for (const auto& n : example_names()) list += (list.empty() ? "" : ", ") + n;
    throw CoefficientError("unknown example '" + name + "'; registered examples: " + list);
}

} // namespace invmeas
