#pragma once

#include <cstdint>
#include <vector>

#include "moetrack/geometry.hpp"
#include "moetrack/mat.hpp"

namespace moetrack {

/// Row-major binary grid.
struct BinMask {
    int h = 0;
    int w = 0;
    std::vector<uint8_t> data;

    BinMask() = default;
    BinMask(int height, int width)
        : h(height), w(width), data(static_cast<size_t>(height) * width, 0) {}

    uint8_t at(int y, int x) const { return data[static_cast<size_t>(y) * w + x]; }
    void set(int y, int x, uint8_t v) { data[static_cast<size_t>(y) * w + x] = v; }
    bool empty() const { return data.empty(); }
    int64_t count() const {
        int64_t c = 0;
        for (uint8_t v : data) c += v ? 1 : 0;
        return c;
    }
};

/// Canonical run-length encoding: alternating zero/one run lengths over the
/// row-major scan, starting with the zero run (which may be 0). Runs after the
/// first are strictly positive and the lengths sum to h*w.
std::vector<int64_t> rle_encode(const BinMask& m);
BinMask rle_decode(const std::vector<int64_t>& runs, int h, int w);

/// Tight bounding box of the set pixels, normalized to [0, 1] using pixel
/// edges. Empty mask is a contract violation.
Box mask_tight_box(const BinMask& m);

/// Average-pool the mask restricted to the box region onto a g x g grid
/// (returned as a (g*g) x 1 column). Cells that cover no pixel center fall
/// back to a bilinear sample at the cell center.
Mat mask_box_pool(const BinMask& m, const Box& box, int g);

/// Filled-rectangle raster of a box on an h x w grid.
BinMask rasterize_box(const Box& box, int h, int w);

} // namespace moetrack
