#pragma once

#include "invmeas/linalg.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

namespace invmeas {

/// Conforming triangulation of a disk centred at the origin. Vertex 0 is the
/// origin; triangles are counter-clockwise.
class TriMesh {
public:
    struct Location {
        int triangle;
        Eigen::Vector3d bary;
    };

    TriMesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles, std::vector<int> boundary,
            double h, double radius);

    const std::vector<Vec2>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
    const std::vector<int>& boundary_vertices() const { return boundary_; }
    double h() const { return h_; }
    double radius() const { return radius_; }
    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_triangles() const { return static_cast<int>(triangles_.size()); }

    bool is_boundary(int v) const { return on_boundary_[static_cast<std::size_t>(v)]; }
    double signed_area(int t) const;
    double area(int t) const { return signed_area(t); }
    /// Constant gradients of the three P1 hat functions on triangle t.
    std::array<Vec2, 3> hat_gradients(int t) const;

    /// Triangle containing p with barycentric coordinates. Points of the disk
    /// that fall between the polygonal boundary and the circle are snapped to
    /// the nearest boundary triangle. Returns nullopt outside the disk.
    std::optional<Location> locate(const Vec2& p) const;

    double max_edge_length() const;
    double max_circumradius() const;

    /// Plain-text export: "dim 2", then "v x y", "t i j k", "b i" lines.
    void write(std::ostream& os) const;

private:
    void build_locator();

    std::vector<Vec2> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<int> boundary_;
    std::vector<bool> on_boundary_;
    double h_;
    double radius_;

    double cell_size_ = 0.0;
    int cells_per_axis_ = 0;
    std::vector<std::vector<int>> cells_;
};

/// Largest vertex count mesh_disk will allocate.
inline constexpr long kMeshVertexBudget = 4'000'000;

/// Structured polar-ring triangulation of the disk of the given radius:
/// rings at radii k R / N (N = ceil(R / h)) carrying 6k vertices each, the
/// outermost ring lying on the circle.
TriMesh mesh_disk(double radius, double h);

} // namespace invmeas
