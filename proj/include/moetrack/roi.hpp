#pragma once

#include "moetrack/geometry.hpp"
#include "moetrack/mat.hpp"

namespace moetrack {

/// Bilinear sampling weights for RoI extraction: one sample per bin center on
/// a g x g grid over the box region. The output row for bin (gy, gx) holds the
/// interpolation weights over the flattened fh x fw feature grid, so
/// roi = S * fmap for any (fh*fw) x C feature matrix. Sample points are
/// clamped to the pixel-center domain (border replication).
Mat roi_sampling_matrix(int fh, int fw, const Box& box, int g);

/// RoI-Align over a spatially laid out token grid, (fh*fw) x C row-major.
Mat roi_align(const Mat& fmap, int fh, int fw, const Box& box, int g);

} // namespace moetrack
