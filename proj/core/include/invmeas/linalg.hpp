#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace invmeas {

/// Largest state-space dimension supported by the pointwise types. Points and
/// matrices live on the stack up to this size.
inline constexpr int kMaxDim = 8;

using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

using Vec2 = Eigen::Vector2d;

inline Point zero_point(int dim) { return Point::Zero(dim); }

inline Point make_point(std::initializer_list<double> xs) {
    Point p(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) p(i++) = x;
    return p;
}

inline Point embed(const Vec2& x, int dim) {
    Point p = Point::Zero(dim);
    p(0) = x(0);
    p(1) = x(1);
    return p;
}

inline bool all_finite(const Point& p) { return p.allFinite(); }

} // namespace invmeas
