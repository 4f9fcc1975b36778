#pragma once

#include "invmeas/fields.hpp"

#include <optional>
#include <string>

namespace invmeas {

/// A scalar field with a declared bound sup|f| and, when compactly
/// supported, a ball containing its support.
struct BoundedField {
    ScalarField field;
    double bound;
    bool nonnegative;
    std::optional<Point> support_center;
    double support_radius = 0.0;
    std::string spec;
};

/// Field specs (centres give the first two coordinates, the rest are zero):
///   const:c              constant c
///   bump:cx,cy:r         exp(1 - 1/(1 - |x-c|^2/r^2)) on B_r(c)
///   ball:cx,cy:r:eps     smoothed indicator of B_r(c), C^1 ramp of width eps
///   coord:i:cap          x_i clamped to [-cap, cap] (i counts from 1)
/// An optional "k*" prefix multiplies the field by the number k.
BoundedField parse_field(const std::string& spec, int dim);

/// c f with the bound and sign information carried along.
BoundedField scaled(const BoundedField& f, double c);

} // namespace invmeas
