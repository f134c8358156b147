#pragma once

#include <algorithm>
#include <cmath>

#include "moetrack/error.hpp"

namespace moetrack {

/// Axis-aligned box in normalized image coordinates, center + extent form.
struct Box {
    double cx = 0, cy = 0, w = 0, h = 0;

    double x0() const { return cx - 0.5 * w; }
    double x1() const { return cx + 0.5 * w; }
    double y0() const { return cy - 0.5 * h; }
    double y1() const { return cy + 0.5 * h; }
};

inline bool box_valid(const Box& b) {
    if (!(b.cx >= 0.0 && b.cx <= 1.0 && b.cy >= 0.0 && b.cy <= 1.0)) return false;
    if (!(b.w > 0.0 && b.w <= 1.0 && b.h > 0.0 && b.h <= 1.0)) return false;
    // must intersect the unit square
    return b.x1() > 0.0 && b.x0() < 1.0 && b.y1() > 0.0 && b.y0() < 1.0;
}

inline void require_box(const Box& b, const char* what) {
    MTK_REQUIRE(box_valid(b), std::string(what) + ": invalid box");
}

inline double intersection_area(const Box& a, const Box& b) {
    const double w = std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
    const double h = std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
    if (w <= 0.0 || h <= 0.0) return 0.0;
    return w * h;
}

/// Intersection over union, in [0, 1].
inline double iou(const Box& a, const Box& b) {
    const double inter = intersection_area(a, b);
    const double uni = a.w * a.h + b.w * b.h - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

} // namespace moetrack
