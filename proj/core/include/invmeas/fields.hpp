#pragma once

#include "invmeas/linalg.hpp"

#include <functional>
#include <optional>
#include <string>

namespace invmeas {

enum class Symmetry { symmetric, antisymmetric, general };

/// A region where a field is only L^p and pointwise values may be unbounded.
struct SingularRegion {
    std::string description;
    std::function<bool(const Point&)> contains;
};

/// A value together with a flag telling whether it was taken inside a
/// declared singular region.
template <class T>
struct Flagged {
    T value;
    bool singular = false;
};

/// Central-difference step used whenever an analytic derivative is missing.
inline double fd_step(const Point& x) { return 1e-4 * (1.0 + x.norm()); }

/// Matrix-valued coefficient x -> M(x) with optional analytic divergences.
///
/// divergence(x)_i = sum_j d_j m_ij, transpose_divergence(x)_i = sum_j d_j m_ji.
/// Without an analytic callback both are computed by central differences
/// with step fd_step(x); uses_finite_differences() reports that.
class MatrixField {
public:
    using EvalFn = std::function<Matrix(const Point&)>;
    using DivFn = std::function<Point(const Point&)>;

    MatrixField(int dim, Symmetry symmetry, EvalFn eval, DivFn divergence = {},
                DivFn transpose_divergence = {});

    static MatrixField zero(int dim, Symmetry symmetry);
    static MatrixField identity(int dim);
    static MatrixField constant(const Matrix& m, Symmetry symmetry);

    int dim() const { return dim_; }
    Symmetry symmetry() const { return symmetry_; }

    Matrix operator()(const Point& x) const { return eval_(x); }

    Point divergence(const Point& x) const;
    Point transpose_divergence(const Point& x) const;

    bool uses_finite_differences() const { return !divergence_; }
    /// Central-difference divergence with an explicit step.
    Point fd_divergence(const Point& x, bool transpose, double step) const;

    MatrixField transposed() const;

    MatrixField with_singular_gradient(SingularRegion region) const;
    const std::optional<SingularRegion>& gradient_singularity() const { return grad_singular_; }
    bool gradient_singular_at(const Point& x) const {
        return grad_singular_ && grad_singular_->contains(x);
    }

private:

    int dim_;
    Symmetry symmetry_;
    EvalFn eval_;
    DivFn divergence_;
    DivFn transpose_divergence_;
    std::optional<SingularRegion> grad_singular_;
};

class VectorField {
public:
    using EvalFn = std::function<Point(const Point&)>;

    VectorField(int dim, EvalFn eval, std::optional<SingularRegion> singular = std::nullopt);

    static VectorField zero(int dim);

    int dim() const { return dim_; }
    Point operator()(const Point& x) const { return eval_(x); }
    Flagged<Point> eval_flagged(const Point& x) const;

    const std::optional<SingularRegion>& singular_support() const { return singular_; }
    bool singular_at(const Point& x) const { return singular_ && singular_->contains(x); }

private:
    int dim_;
    EvalFn eval_;
    std::optional<SingularRegion> singular_;
};

class ScalarField {
public:
    using EvalFn = std::function<double(const Point&)>;
    using GradFn = std::function<Point(const Point&)>;

    ScalarField(int dim, EvalFn eval, GradFn grad = {});

    static ScalarField constant(int dim, double c);

    int dim() const { return dim_; }
    double operator()(const Point& x) const { return eval_(x); }
    Point grad(const Point& x) const;
    bool uses_finite_differences() const { return !grad_; }

private:
    int dim_;
    EvalFn eval_;
    GradFn grad_;
};

} // namespace invmeas
