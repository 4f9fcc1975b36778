#include "invmeas/grid.hpp"

#include "invmeas/error.hpp"
#include "invmeas/strings.hpp"

#include <cmath>
#include <numbers>

namespace invmeas {

namespace {

const double kGoldenAngle = std::numbers::pi * (3.0 - std::sqrt(5.0));

} // namespace

std::vector<Vec2> ball_grid(double radius, int count, const Vec2& center) {
    if (!(radius > 0.0) || count <= 0) throw Error("ball_grid: need radius > 0 and count > 0");
    std::vector<Vec2> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const double r = count == 1 ? 0.0 : radius * std::sqrt(static_cast<double>(k) / (count - 1));
        const double a = k * kGoldenAngle;
        out.push_back(center + Vec2(r * std::cos(a), r * std::sin(a)));
    }
    return out;
}

std::vector<Vec2> annulus_grid(double r_in, double r_out, int count) {
    if (!(r_in >= 0.0) || !(r_out > r_in) || count <= 0)
        throw Error("annulus_grid: need 0 <= r_in < r_out and count > 0");
    std::vector<Vec2> out;
    out.reserve(static_cast<std::size_t>(count));
    const double a2 = r_in * r_in;
    const double b2 = r_out * r_out;
    for (int k = 0; k < count; ++k) {
        const double frac = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
        const double r = std::sqrt(a2 + (b2 - a2) * frac);
        const double a = k * kGoldenAngle;
        out.emplace_back(r * std::cos(a), r * std::sin(a));
    }
    return out;
}

std::vector<Point> parse_grid(const std::string& spec, int dim) {
    const auto parts = split(spec, ':');
    auto fail = [&](const std::string& why) -> ParseError {
        return ParseError("grid spec '" + spec + "': " + why +
                     " (expected ball:R:N, annulus:R0:R1:N or points:x,y;x,y)");
    };
    std::vector<Vec2> planar;
    try {
        if (parts.size() == 3 && parts[0] == "ball") {
            planar = ball_grid(parse_double(parts[1]), parse_int(parts[2]));
        } else if (parts.size() == 4 && parts[0] == "annulus") {
            planar = annulus_grid(parse_double(parts[1]), parse_double(parts[2]), parse_int(parts[3]));
        } else if (parts.size() == 2 && parts[0] == "points") {
            std::vector<Point> out;
            for (const auto& item : split(parts[1], ';')) {
                const auto xs = parse_double_list(item);
                if (xs.size() != 2 && static_cast<int>(xs.size()) != dim)
                    throw fail("point '" + item + "' needs 2 or " + std::to_string(dim) + " coordinates");
                Point p = Point::Zero(dim);
                for (std::size_t i = 0; i < xs.size(); ++i) p(static_cast<Eigen::Index>(i)) = xs[i];
                out.push_back(p);
            }
            if (out.empty()) throw fail("no points");
            return out;
        } else {
            throw fail("unrecognised form");
        }
    } catch (const ParseError& e) {
        if (std::string_view(e.what()).starts_with("grid spec")) throw;
        throw fail(e.what());
    }
    std::vector<Point> out;
    out.reserve(planar.size());
    for (const auto& p : planar) out.push_back(embed(p, dim));
    return out;
}

} // namespace invmeas
