#pragma once

#include "invmeas/linalg.hpp"

#include <string>
#include <vector>

namespace invmeas {

/// Vogel-spiral points filling the closed disk: the first point is the
/// centre and the last lies on the circle.
std::vector<Vec2> ball_grid(double radius, int count, const Vec2& center = Vec2::Zero());

/// Vogel-spiral points equidistributed in area on r_in <= |x| <= r_out.
std::vector<Vec2> annulus_grid(double r_in, double r_out, int count);

/// Grid specs:
///   ball:R:N            ball_grid(R, N)
///   annulus:R0:R1:N     annulus_grid(R0, R1, N)
///   points:x,y;x,y;...  explicit points (2 or dim coordinates each)
/// Planar points are embedded into R^dim with zero trailing coordinates.
std::vector<Point> parse_grid(const std::string& spec, int dim);

} // namespace invmeas
