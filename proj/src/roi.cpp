#include "moetrack/roi.hpp"

#include <algorithm>
#include <cmath>

namespace moetrack {

Mat roi_sampling_matrix(int fh, int fw, const Box& box, int g) {
    MTK_REQUIRE(fh >= 1 && fw >= 1, "roi: empty feature grid");
    MTK_REQUIRE(g >= 1, "roi: output size must be positive");
    MTK_REQUIRE(box.w > 0.0 && box.h > 0.0, "roi: degenerate box");
    Mat s(g * g, fh * fw);
    for (int gy = 0; gy < g; ++gy) {
        for (int gx = 0; gx < g; ++gx) {
            // sample point in feature coordinates, pixel centers at i + 0.5
            const double sx = (box.x0() + (gx + 0.5) * box.w / g) * fw;
            const double sy = (box.y0() + (gy + 0.5) * box.h / g) * fh;
            const double tx = std::clamp(sx - 0.5, 0.0, static_cast<double>(fw - 1));
            const double ty = std::clamp(sy - 0.5, 0.0, static_cast<double>(fh - 1));
            const int x0 = std::min(static_cast<int>(tx), fw - 1);
            const int y0 = std::min(static_cast<int>(ty), fh - 1);
            const int x1 = std::min(x0 + 1, fw - 1);
            const int y1 = std::min(y0 + 1, fh - 1);
            const double fx = tx - x0;
            const double fy = ty - y0;
            const int row = gy * g + gx;
            s.at(row, y0 * fw + x0) += (1.0 - fy) * (1.0 - fx);
            s.at(row, y0 * fw + x1) += (1.0 - fy) * fx;
            s.at(row, y1 * fw + x0) += fy * (1.0 - fx);
            s.at(row, y1 * fw + x1) += fy * fx;
        }
    }
    return s;
}

Mat roi_align(const Mat& fmap, int fh, int fw, const Box& box, int g) {
    MTK_REQUIRE(fmap.rows == fh * fw, "roi_align: feature grid shape mismatch");
    return matmul(roi_sampling_matrix(fh, fw, box, g), fmap);
}

} // namespace moetrack
