#include "invmeas/fields.hpp"

#include "invmeas/error.hpp"

#include <utility>

namespace invmeas {

MatrixField::MatrixField(int dim, Symmetry symmetry, EvalFn eval, DivFn divergence,
                         DivFn transpose_divergence)
    : dim_(dim), symmetry_(symmetry), eval_(std::move(eval)), divergence_(std::move(divergence)),
      transpose_divergence_(std::move(transpose_divergence)) {
    if (dim_ < 1 || dim_ > kMaxDim) throw CoefficientError("MatrixField: unsupported dimension");
    if (!eval_) throw CoefficientError("MatrixField: missing evaluator");
    // A general field with only one analytic divergence cannot recover the other.
    if (symmetry_ == Symmetry::general && divergence_ && !transpose_divergence_) divergence_ = {};
}

MatrixField MatrixField::zero(int dim, Symmetry symmetry) {
    return MatrixField(
        dim, symmetry, [dim](const Point&) -> Matrix { return Matrix::Zero(dim, dim); },
        [dim](const Point&) { return zero_point(dim); }, [dim](const Point&) { return zero_point(dim); });
}

MatrixField MatrixField::identity(int dim) {
    return MatrixField(
        dim, Symmetry::symmetric, [dim](const Point&) -> Matrix { return Matrix::Identity(dim, dim); },
        [dim](const Point&) { return zero_point(dim); });
}

MatrixField MatrixField::constant(const Matrix& m, Symmetry symmetry) {
    const int dim = static_cast<int>(m.rows());
    return MatrixField(
        dim, symmetry, [m](const Point&) -> Matrix { return m; },
        [dim](const Point&) { return zero_point(dim); }, [dim](const Point&) { return zero_point(dim); });
}

Point MatrixField::divergence(const Point& x) const {
    if (divergence_) return divergence_(x);
    return fd_divergence(x, false, fd_step(x));
}

Point MatrixField::transpose_divergence(const Point& x) const {
    switch (symmetry_) {
    case Symmetry::symmetric:
        return divergence(x);
    case Symmetry::antisymmetric:
        return -divergence(x);
    case Symmetry::general:
        break;
    }
    if (transpose_divergence_) return transpose_divergence_(x);
    return fd_divergence(x, true, fd_step(x));
}

Point MatrixField::fd_divergence(const Point& x, bool transpose, double h) const {
    Point out = zero_point(dim_);
    Point xp = x;
    for (int j = 0; j < dim_; ++j) {
        xp(j) = x(j) + h;
        const Matrix plus = eval_(xp);
        xp(j) = x(j) - h;
        const Matrix minus = eval_(xp);
        xp(j) = x(j);
        for (int i = 0; i < dim_; ++i) {
            const double d = transpose ? (plus(j, i) - minus(j, i)) : (plus(i, j) - minus(i, j));
            out(i) += d / (2.0 * h);
        }
    }
    return out;
}

MatrixField MatrixField::transposed() const {
    MatrixField t = *this;
    t.eval_ = [f = eval_](const Point& x) -> Matrix { return f(x).transpose(); };
    if (symmetry_ == Symmetry::general) {
        std::swap(t.divergence_, t.transpose_divergence_);
    } else if (symmetry_ == Symmetry::antisymmetric && divergence_) {
        t.divergence_ = [f = divergence_](const Point& x) -> Point { return -f(x); };
    }
    return t;
}

MatrixField MatrixField::with_singular_gradient(SingularRegion region) const {
    MatrixField out = *this;
    out.grad_singular_ = std::move(region);
    return out;
}

VectorField::VectorField(int dim, EvalFn eval, std::optional<SingularRegion> singular)
    : dim_(dim), eval_(std::move(eval)), singular_(std::move(singular)) {
    if (dim_ < 1 || dim_ > kMaxDim) throw CoefficientError("VectorField: unsupported dimension");
    if (!eval_) throw CoefficientError("VectorField: missing evaluator");
}

VectorField VectorField::zero(int dim) {
    return VectorField(dim, [dim](const Point&) { return zero_point(dim); });
}

Flagged<Point> VectorField::eval_flagged(const Point& x) const {
    return {eval_(x), singular_at(x)};
}

ScalarField::ScalarField(int dim, EvalFn eval, GradFn grad)
    : dim_(dim), eval_(std::move(eval)), grad_(std::move(grad)) {
    if (dim_ < 1 || dim_ > kMaxDim) throw CoefficientError("ScalarField: unsupported dimension");
    if (!eval_) throw CoefficientError("ScalarField: missing evaluator");
}

ScalarField ScalarField::constant(int dim, double c) {
    return ScalarField(
        dim, [c](const Point&) { return c; }, [dim](const Point&) { return zero_point(dim); });
}

Point ScalarField::grad(const Point& x) const {
    if (grad_) return grad_(x);
    const double h = fd_step(x);
    Point g = zero_point(dim_);
    Point xp = x;
    for (int j = 0; j < dim_; ++j) {
        xp(j) = x(j) + h;
        const double plus = eval_(xp);
        xp(j) = x(j) - h;
        const double minus = eval_(xp);
        xp(j) = x(j);
        g(j) = (plus - minus) / (2.0 * h);
    }
    return g;
}

} // namespace invmeas
