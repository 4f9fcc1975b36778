#include "invmeas/mesh.hpp"

#include "invmeas/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

namespace invmeas {

namespace {

// Common angular phase of every ring. A generic value keeps element
// quadrature nodes off the coordinate axes.
constexpr double kRingPhase = 0.1234567;

double cross(const Vec2& a, const Vec2& b) { return a(0) * b(1) - a(1) * b(0); }

} // namespace

TriMesh::TriMesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles, std::vector<int> boundary,
                 double h, double radius)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), boundary_(std::move(boundary)),
      on_boundary_(vertices_.size(), false), h_(h), radius_(radius) {
    for (int b : boundary_) {
        if (b < 0 || b >= num_vertices()) throw MeshError("boundary index out of range");
        on_boundary_[static_cast<std::size_t>(b)] = true;
    }
    for (int t = 0; t < num_triangles(); ++t) {
        for (int v : triangles_[static_cast<std::size_t>(t)])
            if (v < 0 || v >= num_vertices()) throw MeshError("triangle " + std::to_string(t) + " has a bad index");
        if (!(signed_area(t) > 0.0))
            throw MeshError("triangle " + std::to_string(t) + " is not positively oriented");
    }
    build_locator();
}

double TriMesh::signed_area(int t) const {
    const auto& tri = triangles_[static_cast<std::size_t>(t)];
    const Vec2& a = vertices_[static_cast<std::size_t>(tri[0])];
    const Vec2& b = vertices_[static_cast<std::size_t>(tri[1])];
    const Vec2& c = vertices_[static_cast<std::size_t>(tri[2])];
    return 0.5 * cross(b - a, c - a);
}

std::array<Vec2, 3> TriMesh::hat_gradients(int t) const {
    const auto& tri = triangles_[static_cast<std::size_t>(t)];
    const Vec2& a = vertices_[static_cast<std::size_t>(tri[0])];
    const Vec2& b = vertices_[static_cast<std::size_t>(tri[1])];
    const Vec2& c = vertices_[static_cast<std::size_t>(tri[2])];
    const double twice_area = cross(b - a, c - a);
    // grad of the hat at vertex k is the inward normal of the opposite edge over 2|T|.
    auto perp = [](const Vec2& e) { return Vec2(-e(1), e(0)); };
    return {perp(c - b) / twice_area, perp(a - c) / twice_area, perp(b - a) / twice_area};
}

void TriMesh::build_locator() {
    cell_size_ = std::max(h_, 2.0 * radius_ / 2048.0);
    cells_per_axis_ = std::max(1, static_cast<int>(std::ceil(2.0 * radius_ / cell_size_)));
    cells_.assign(static_cast<std::size_t>(cells_per_axis_) * static_cast<std::size_t>(cells_per_axis_), {});
    auto cell_of = [&](double c) {
        return std::clamp(static_cast<int>(std::floor((c + radius_) / cell_size_)), 0, cells_per_axis_ - 1);
    };
    for (int t = 0; t < num_triangles(); ++t) {
        const auto& tri = triangles_[static_cast<std::size_t>(t)];
        double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
        for (int v : tri) {
            const Vec2& p = vertices_[static_cast<std::size_t>(v)];
            xmin = std::min(xmin, p(0));
            xmax = std::max(xmax, p(0));
            ymin = std::min(ymin, p(1));
            ymax = std::max(ymax, p(1));
        }
        for (int i = cell_of(xmin); i <= cell_of(xmax); ++i)
            for (int j = cell_of(ymin); j <= cell_of(ymax); ++j)
                cells_[static_cast<std::size_t>(i) * static_cast<std::size_t>(cells_per_axis_) +
                       static_cast<std::size_t>(j)]
                    .push_back(t);
    }
}

std::optional<TriMesh::Location> TriMesh::locate(const Vec2& p) const {
    if (!p.allFinite() || p.norm() > radius_ * (1.0 + 1e-12)) return std::nullopt;
    auto cell_of = [&](double c) {
        return std::clamp(static_cast<int>(std::floor((c + radius_) / cell_size_)), 0, cells_per_axis_ - 1);
    };
    const int ci = cell_of(p(0));
    const int cj = cell_of(p(1));

    auto barycentric = [&](int t) {
        const auto& tri = triangles_[static_cast<std::size_t>(t)];
        const Vec2& a = vertices_[static_cast<std::size_t>(tri[0])];
        const Vec2& b = vertices_[static_cast<std::size_t>(tri[1])];
        const Vec2& c = vertices_[static_cast<std::size_t>(tri[2])];
        const double area2 = cross(b - a, c - a);
        Eigen::Vector3d l;
        l(0) = cross(b - p, c - p) / area2;
        l(1) = cross(c - p, a - p) / area2;
        l(2) = 1.0 - l(0) - l(1);
        return l;
    };

    const double tol = -1e-12;
    int best = -1;
    double best_violation = -std::numeric_limits<double>::infinity();
    Eigen::Vector3d best_l;
    for (int ring = 0; ring <= 1; ++ring) {
        for (int i = ci - ring; i <= ci + ring; ++i) {
            for (int j = cj - ring; j <= cj + ring; ++j) {
                if (i < 0 || j < 0 || i >= cells_per_axis_ || j >= cells_per_axis_) continue;
                if (ring == 1 && i != ci - 1 && i != ci + 1 && j != cj - 1 && j != cj + 1) continue;
                for (int t : cells_[static_cast<std::size_t>(i) * static_cast<std::size_t>(cells_per_axis_) +
                                    static_cast<std::size_t>(j)]) {
                    const Eigen::Vector3d l = barycentric(t);
                    const double m = l.minCoeff();
                    if (m >= tol) return Location{t, l};
                    if (m > best_violation) {
                        best_violation = m;
                        best = t;
                        best_l = l;
                    }
                }
            }
        }
    }
    if (best < 0) return std::nullopt;
    // p lies in the sliver between a boundary chord and the circle
    for (int k = 0; k < 3; ++k) best_l(k) = std::max(best_l(k), 0.0);
    best_l /= best_l.sum();
    return Location{best, best_l};
}

double TriMesh::max_edge_length() const {
    double m = 0.0;
    for (const auto& tri : triangles_)
        for (int k = 0; k < 3; ++k)
            m = std::max(m, (vertices_[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])] -
                             vertices_[static_cast<std::size_t>(tri[static_cast<std::size_t>((k + 1) % 3)])])
                                .norm());
    return m;
}

double TriMesh::max_circumradius() const {
    double m = 0.0;
    for (int t = 0; t < num_triangles(); ++t) {
        const auto& tri = triangles_[static_cast<std::size_t>(t)];
        const double a = (vertices_[static_cast<std::size_t>(tri[1])] - vertices_[static_cast<std::size_t>(tri[2])]).norm();
        const double b = (vertices_[static_cast<std::size_t>(tri[0])] - vertices_[static_cast<std::size_t>(tri[2])]).norm();
        const double c = (vertices_[static_cast<std::size_t>(tri[0])] - vertices_[static_cast<std::size_t>(tri[1])]).norm();
        m = std::max(m, a * b * c / (4.0 * area(t)));
    }
    return m;
}

void TriMesh::write(std::ostream& os) const {
    char buf[96];
    os << "dim 2\n";
    for (const Vec2& v : vertices_) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g\n", v(0), v(1));
        os << buf;
    }
    for (const auto& t : triangles_) os << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    for (int b : boundary_) os << "b " << b << '\n';
}

constexpr double kRingSpacing = 0.75;

TriMesh mesh_disk(double radius, double h) {
    if (!(radius > 0.0) || !(h > 0.0)) throw MeshError("mesh_disk: radius and h must be positive");
    if (!(h < radius)) throw MeshError("mesh_disk: h must be smaller than the radius");
    // Ring spacing 0.75 h keeps the diagonal edges (sqrt(3) * spacing) below 1.5 h.
    const double rings_d = std::ceil(radius / (kRingSpacing * h) - 1e-9);
    const double estimate = 1.0 + 3.0 * rings_d * (rings_d + 1.0);
    if (estimate > static_cast<double>(kMeshVertexBudget))
        throw MeshError("mesh_disk: h too small for the memory budget (estimated " +
                        std::to_string(static_cast<long long>(estimate)) + " vertices)");
    const int rings = static_cast<int>(rings_d);
    const double dr = radius / rings;

    std::vector<Vec2> vertices;
    vertices.reserve(static_cast<std::size_t>(estimate));
    vertices.emplace_back(0.0, 0.0);
    std::vector<int> ring_start(static_cast<std::size_t>(rings) + 1, 0);
    for (int k = 1; k <= rings; ++k) {
        ring_start[static_cast<std::size_t>(k)] = static_cast<int>(vertices.size());
        const int m = 6 * k;
        const double r = k == rings ? radius : k * dr;
        for (int j = 0; j < m; ++j) {
            const double theta = kRingPhase + 2.0 * std::numbers::pi * j / m;
            vertices.emplace_back(r * std::cos(theta), r * std::sin(theta));
        }
    }

    std::vector<std::array<int, 3>> triangles;
    triangles.reserve(static_cast<std::size_t>(6 * rings * rings));
    for (int j = 0; j < 6; ++j) triangles.push_back({0, 1 + j, 1 + (j + 1) % 6});
    for (int k = 2; k <= rings; ++k) {
        const int a = 6 * (k - 1);
        const int b = 6 * k;
        const int in0 = ring_start[static_cast<std::size_t>(k - 1)];
        const int out0 = ring_start[static_cast<std::size_t>(k)];
        int i = 0;
        int o = 0;
        // Merge the two rings by angle; (o+1)/b <= (i+1)/a compared in integers.
        while (i < a || o < b) {
            const bool advance_outer = i == a || (o < b && static_cast<long>(o + 1) * a <= static_cast<long>(i + 1) * b);
            if (advance_outer) {
                triangles.push_back({in0 + i % a, out0 + o % b, out0 + (o + 1) % b});
                ++o;
            } else {
                triangles.push_back({in0 + i % a, out0 + o % b, in0 + (i + 1) % a});
                ++i;
            }
        }
    }

    std::vector<int> boundary;
    boundary.reserve(static_cast<std::size_t>(6 * rings));
    for (int j = 0; j < 6 * rings; ++j) boundary.push_back(ring_start[static_cast<std::size_t>(rings)] + j);

    return TriMesh(std::move(vertices), std::move(triangles), std::move(boundary), h, radius);
}

} // namespace invmeas
