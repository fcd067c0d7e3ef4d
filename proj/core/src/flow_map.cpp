#include "flam/flow_map.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "flam/errors.hpp"
#include "flam/io.hpp"

namespace flam {

void GridSpec::validate() const {
    if (!(dx > 0.0) || !(dy > 0.0)) {
        throw ConfigError("grid spacing must be positive");
    }
    if (nx < 2 || ny < 2) {
        throw ConfigError("grid needs at least 2 nodes along each axis");
    }
    if (!origin.allFinite()) {
        throw ConfigError("grid origin must be finite");
    }
}

std::optional<CellIndex> find_cell(const GridSpec& grid, const Vec2& p) {
    if (!grid.hull().contains(p)) {
        return std::nullopt;
    }
    const Vec2 rel = p - grid.origin;
    const int col = std::clamp(static_cast<int>(std::floor(rel.x() / grid.dx)), 0, grid.nx - 2);
    const int row = std::clamp(static_cast<int>(std::floor(rel.y() / grid.dy)), 0, grid.ny - 2);
    return CellIndex{col, row};
}

BilinearStencil bilinear_stencil(const GridSpec& grid, CellIndex cell, const Vec2& p) {
    const double x1 = grid.origin.x() + cell.col * grid.dx;
    const double y1 = grid.origin.y() + cell.row * grid.dy;
    const double x2 = x1 + grid.dx;
    const double y2 = y1 + grid.dy;
    // Outside the cell the bilinear polynomial is extrapolated, which keeps the
    // weights smooth in p for estimated positions that leave their cell.
    const double x = p.x();
    const double y = p.y();

    const double area = grid.dx * grid.dy;
    const double ax = (x2 - x);
    const double bx = (x - x1);
    const double ay = (y2 - y);
    const double by = (y - y1);

    BilinearStencil s;
    s.cell.nodes = {grid.node_id(cell.col, cell.row), grid.node_id(cell.col + 1, cell.row),
                    grid.node_id(cell.col, cell.row + 1), grid.node_id(cell.col + 1, cell.row + 1)};
    s.cell.weights = {ay * ax / area, ay * bx / area, by * ax / area, by * bx / area};
    s.d_dx = {-ay / area, ay / area, -by / area, by / area};
    s.d_dy = {-ax / area, -bx / area, ax / area, bx / area};
    return s;
}

CellWeights locate_cell(const GridSpec& grid, const Vec2& p) {
    const auto cell = find_cell(grid, p);
    if (!cell) {
        throw OutOfMapError("point (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) +
                            ") outside grid hull");
    }
    return bilinear_stencil(grid, *cell, p).cell;
}

FlowMap::FlowMap(GridSpec grid, std::vector<Vec2> node_velocities)
    : grid_(grid), velocities_(std::move(node_velocities)) {
    grid_.validate();
    if (velocities_.size() != grid_.node_count()) {
        throw ConfigError("flow map has " + std::to_string(velocities_.size()) +
                          " velocities for " + std::to_string(grid_.node_count()) + " nodes");
    }
    for (const auto& v : velocities_) {
        if (!v.allFinite()) {
            throw ConfigError("flow map velocities must be finite");
        }
    }
}

FlowMap::FlowMap(GridSpec grid)
    : FlowMap(grid, std::vector<Vec2>(grid.node_count(), Vec2::Zero())) {}

Vec2 interpolate(const FlowMap& map, const Vec2& p) {
    return map.blend(locate_cell(map.grid(), p));
}

FlowMap sample_truth(const FlowField& field, const GridSpec& grid, double t) {
    grid.validate();
    std::vector<Vec2> v(grid.node_count());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2 p = grid.node_position(static_cast<int>(i));
        if (!field.domain().contains(p, 1e-9)) {
            throw ConfigError("grid node " + std::to_string(i) + " lies outside the flow domain");
        }
        v[i] = field.velocity(p, t);
    }
    return FlowMap(grid, std::move(v));
}

void write_map_csv(std::ostream& os, const FlowMap& map) {
    os << "node_id,x,y,vx,vy\n";
    for (std::size_t i = 0; i < map.size(); ++i) {
        const Vec2 p = map.grid().node_position(static_cast<int>(i));
        os << i << ',' << fmt_double(p.x()) << ',' << fmt_double(p.y()) << ','
           << fmt_double(map[i].x()) << ',' << fmt_double(map[i].y()) << '\n';
    }
}

}  // namespace flam
