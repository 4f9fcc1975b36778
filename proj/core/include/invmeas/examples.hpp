#pragma once

#include "invmeas/coefficients.hpp"

#include <string>
#include <vector>

namespace invmeas {

/// Numeric template parameters for registered coefficient sets.
struct ExampleParams {
    int dim = 2;
    /// Scalar multiple a of the diffusion matrix (A = a I for identity/ou).
    double diffusion = 1.0;
    /// Drift strength: H = -theta x for ou, rotation rate for growth-demo.
    double theta = 1.0;
};

/// Registered sets:
///   identity     A = I, C = 0, H = 0
///   ou           A = a I, C = 0, H = -theta x; density exp(-theta |x|^2 / a)
///   infsin       A = I, C built from the singular profile v, H = 0; density 1
///   growth-demo  A = a sqrt(1 + |x|^2) I, C as infsin, H = theta (-x2, x1, 0, ...); density 1
CoefficientSet example(const std::string& name, const ExampleParams& params = {});

std::vector<std::string> example_names();

/// Profile functions behind the infsin set. All live in R^d, d = x.size().
namespace infsin {

/// Smooth bump exp(1 - 1/(1 - (4|x|)^2)) supported in the ball of radius 1/4.
double eta(const Point& x);
Point grad_eta(const Point& x);

/// F(s) = int_{-2}^{s} |y|^{-1/d} 1_{[-1,1]}(y) dy, in closed form.
double antiderivative(double s, int dim);
/// F'(s) = |s|^{-1/d} on [-1, 1], 0 outside; +inf at s = 0.
double antiderivative_slope(double s, int dim);

double w(const Point& x);
Point grad_w(const Point& x);

/// v(x) = w(x) + sum_{i>=1} 2^{-i} w(x - i e1), truncated once 2^{-i} < 1e-12.
double v(const Point& x);
Point grad_v(const Point& x);

/// Number of shifted copies kept in v (including i = 0).
int series_terms();

/// True on the segments {x1 = i} inside the supports of the shifted bumps,
/// where d1 v is infinite.
bool on_singular_line(const Point& x);

} // namespace infsin

} // namespace invmeas
