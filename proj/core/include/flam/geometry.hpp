// Planar geometry primitives shared by every module.
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Core>

namespace flam {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Axis-aligned rectangle, closed on all sides.
struct Rect {
    Vec2 min = Vec2::Zero();
    Vec2 max = Vec2::Zero();

    [[nodiscard]] double width() const { return max.x() - min.x(); }
    [[nodiscard]] double height() const { return max.y() - min.y(); }

    [[nodiscard]] bool contains(const Vec2& p, double slack = 0.0) const {
        return p.x() >= min.x() - slack && p.x() <= max.x() + slack &&
               p.y() >= min.y() - slack && p.y() <= max.y() + slack;
    }

    [[nodiscard]] Vec2 clamp(const Vec2& p) const {
        return {std::clamp(p.x(), min.x(), max.x()),
                std::clamp(p.y(), min.y(), max.y())};
    }
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::remainder(a, two_pi);
    if (w <= -std::numbers::pi) {
        w += two_pi;
    }
    return w;
}

}  // namespace flam
