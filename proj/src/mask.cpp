#include "moetrack/mask.hpp"

#include <cmath>

namespace moetrack {

std::vector<int64_t> rle_encode(const BinMask& m) {
    std::vector<int64_t> runs;
    uint8_t expect = 0;  // runs alternate starting with the zero run
    int64_t run = 0;
    for (size_t i = 0; i < m.data.size(); ++i) {
        const uint8_t v = m.data[i] ? 1 : 0;
        if (v == expect) {
            ++run;
        } else {
            runs.push_back(run);
            expect = v;
            run = 1;
        }
    }
    runs.push_back(run);
    if (m.data.empty()) runs.assign(1, 0);
    return runs;
}

BinMask rle_decode(const std::vector<int64_t>& runs, int h, int w) {
    MTK_REQUIRE(h >= 0 && w >= 0, "rle_decode: negative grid size");
    BinMask m(h, w);
    int64_t pos = 0;
    uint8_t value = 0;
    for (size_t i = 0; i < runs.size(); ++i) {
        const int64_t run = runs[i];
        MTK_REQUIRE(run >= 0, "rle_decode: negative run length");
        MTK_REQUIRE(i == 0 || run > 0 || i + 1 == runs.size(),
                    "rle_decode: zero-length interior run");
        MTK_REQUIRE(pos + run <= static_cast<int64_t>(m.data.size()),
                    "rle_decode: runs exceed grid size");
        if (value)
            for (int64_t k = 0; k < run; ++k) m.data[static_cast<size_t>(pos + k)] = 1;
        pos += run;
        value = static_cast<uint8_t>(1 - value);
    }
    MTK_REQUIRE(pos == static_cast<int64_t>(m.data.size()), "rle_decode: runs do not cover grid");
    return m;
}

Box mask_tight_box(const BinMask& m) {
    int min_x = m.w, max_x = -1, min_y = m.h, max_y = -1;
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x)
            if (m.at(y, x)) {
                min_x = std::min(min_x, x);
                max_x = std::max(max_x, x);
                min_y = std::min(min_y, y);
                max_y = std::max(max_y, y);
            }
    MTK_REQUIRE(max_x >= 0, "mask_tight_box: empty mask");
    Box b;
    b.w = static_cast<double>(max_x - min_x + 1) / m.w;
    b.h = static_cast<double>(max_y - min_y + 1) / m.h;
    b.cx = (min_x + 0.5 * (max_x - min_x + 1)) / m.w;
    b.cy = (min_y + 0.5 * (max_y - min_y + 1)) / m.h;
    return b;
}

Mat mask_box_pool(const BinMask& m, const Box& box, int g) {
    MTK_REQUIRE(g >= 1, "mask_box_pool: grid size must be positive");
    MTK_REQUIRE(!m.empty(), "mask_box_pool: empty mask");
    require_box(box, "mask_box_pool");
    Mat out(g * g, 1);
    const double bx0 = box.x0() * m.w;
    const double by0 = box.y0() * m.h;
    const double bw = box.w * m.w / g;
    const double bh = box.h * m.h / g;
    for (int gy = 0; gy < g; ++gy) {
        for (int gx = 0; gx < g; ++gx) {
            const double x0 = bx0 + gx * bw;
            const double x1 = x0 + bw;
            const double y0 = by0 + gy * bh;
            const double y1 = y0 + bh;
            double sum = 0.0;
            int count = 0;
            const int px0 = std::max(0, static_cast<int>(std::ceil(x0 - 0.5)));
            const int px1 = std::min(m.w - 1, static_cast<int>(std::floor(x1 - 0.5)));
            const int py0 = std::max(0, static_cast<int>(std::ceil(y0 - 0.5)));
            const int py1 = std::min(m.h - 1, static_cast<int>(std::floor(y1 - 0.5)));
            for (int y = py0; y <= py1; ++y)
                for (int x = px0; x <= px1; ++x) {
                    sum += m.at(y, x) ? 1.0 : 0.0;
                    ++count;
                }
            if (count > 0) {
                out.at(gy * g + gx, 0) = sum / count;
            } else {
                // sub-pixel cell: nearest pixel at the cell center
                const int cx = std::clamp(static_cast<int>((x0 + x1) * 0.5), 0, m.w - 1);
                const int cy = std::clamp(static_cast<int>((y0 + y1) * 0.5), 0, m.h - 1);
                out.at(gy * g + gx, 0) = m.at(cy, cx) ? 1.0 : 0.0;
            }
        }
    }
    return out;
}

BinMask rasterize_box(const Box& box, int h, int w) {
    require_box(box, "rasterize_box");
    BinMask m(h, w);
    const int x0 = std::clamp(static_cast<int>(std::round(box.x0() * w)), 0, w);
    const int x1 = std::clamp(static_cast<int>(std::round(box.x1() * w)), 0, w);
    const int y0 = std::clamp(static_cast<int>(std::round(box.y0() * h)), 0, h);
    const int y1 = std::clamp(static_cast<int>(std::round(box.y1() * h)), 0, h);
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) m.set(y, x, 1);
    return m;
}

} // namespace moetrack
