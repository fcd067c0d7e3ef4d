// Gridded flow map and bilinear interpolation between node velocities.
#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "flam/flow_models.hpp"
#include "flam/geometry.hpp"

namespace flam {

/// Regular grid; node ids are row-major: id = row * nx + col.
struct GridSpec {
    Vec2 origin = Vec2::Zero();
    double dx = 1.0;
    double dy = 1.0;
    int nx = 2;
    int ny = 2;

    void validate() const;

    [[nodiscard]] std::size_t node_count() const { return static_cast<std::size_t>(nx) * ny; }
    [[nodiscard]] int node_id(int col, int row) const { return row * nx + col; }
    [[nodiscard]] int col_of(int id) const { return id % nx; }
    [[nodiscard]] int row_of(int id) const { return id / nx; }
    [[nodiscard]] Vec2 node_position(int id) const {
        return origin + Vec2(col_of(id) * dx, row_of(id) * dy);
    }
    [[nodiscard]] Rect hull() const {
        return {origin, origin + Vec2((nx - 1) * dx, (ny - 1) * dy)};
    }
    /// Node lies on the outer ring of the grid.
    [[nodiscard]] bool is_boundary(int id) const {
        const int c = col_of(id);
        const int r = row_of(id);
        return c == 0 || r == 0 || c == nx - 1 || r == ny - 1;
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Lower-left corner of a grid cell.
struct CellIndex {
    int col = 0;
    int row = 0;

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Node ids in the order (i11, i21, i12, i22): (x1,y1), (x2,y1), (x1,y2), (x2,y2).
struct CellWeights {
    std::array<int, 4> nodes{};
    std::array<double, 4> weights{};
};

/// Bilinear weights plus their derivatives with respect to the query point.
struct BilinearStencil {
    CellWeights cell;
    std::array<double, 4> d_dx{};
    std::array<double, 4> d_dy{};
};

/// Cell boxing `p`, or nullopt outside the closed hull. Points on interior
/// edges go to the cell on the upper/right side, except on the last row/column.
[[nodiscard]] std::optional<CellIndex> find_cell(const GridSpec& grid, const Vec2& p);

/// Throws OutOfMapError when `p` is outside the hull.
[[nodiscard]] CellWeights locate_cell(const GridSpec& grid, const Vec2& p);

/// Weights of `p` relative to a given (frozen) cell. Points outside the cell
/// get extrapolated weights (they still sum to one).
[[nodiscard]] BilinearStencil bilinear_stencil(const GridSpec& grid, CellIndex cell, const Vec2& p);

class FlowMap {
public:
    FlowMap() = default;
    FlowMap(GridSpec grid, std::vector<Vec2> node_velocities);
    /// All-zero map.
    explicit FlowMap(GridSpec grid);

    [[nodiscard]] const GridSpec& grid() const { return grid_; }
    [[nodiscard]] std::size_t size() const { return velocities_.size(); }
    [[nodiscard]] const Vec2& operator[](std::size_t i) const { return velocities_[i]; }
    [[nodiscard]] Vec2& operator[](std::size_t i) { return velocities_[i]; }
    [[nodiscard]] const std::vector<Vec2>& velocities() const { return velocities_; }

    [[nodiscard]] Vec2 blend(const CellWeights& w) const {
        Vec2 v = Vec2::Zero();
        for (std::size_t j = 0; j < 4; ++j) {
            v += w.weights[j] * velocities_[w.nodes[j]];
        }
        return v;
    }

private:
    GridSpec grid_;
    std::vector<Vec2> velocities_;
};

/// Bilinear interpolation; throws OutOfMapError outside the hull.
[[nodiscard]] Vec2 interpolate(const FlowMap& map, const Vec2& p);

/// Ground-truth map: field velocity at every node at time t.
[[nodiscard]] FlowMap sample_truth(const FlowField& field, const GridSpec& grid, double t);

/// CSV with header node_id,x,y,vx,vy.
void write_map_csv(std::ostream& os, const FlowMap& map);

}  // namespace flam
