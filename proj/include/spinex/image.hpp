#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace spinex {

/// Single-channel raster of real intensities. Rows are scanlines, so
/// g(y, x) addresses row y, column x. Pipeline stages expect values in
/// [0, 1] unless a stage documents otherwise (inverted images are signed).
using Grid = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline int grid_height(const Grid& g) { return static_cast<int>(g.rows()); }
inline int grid_width(const Grid& g) { return static_cast<int>(g.cols()); }

bool all_finite(const Grid& g);

/// Throws std::invalid_argument unless the grid is at least 8x8 and finite.
void require_valid_stage_input(const Grid& g, const char* op);

/// Reflect-101 indexing (mirror without repeating the border sample),
/// e.g. for n=5: -2 -> 2, -1 -> 1, 5 -> 3.
int reflect_index(int i, int n);

Grid reflect_pad(const Grid& g, int top, int bottom, int left, int right);

/// Separable Gaussian blur with reflected borders; sigma <= 0 returns a copy.
Grid gaussian_blur(const Grid& g, double sigma);

/// 2x2 block-mean downsample; odd trailing row/column is dropped.
Grid box_downsample2(const Grid& g);

/// Clamp to [0, 1].
Grid clamp01(const Grid& g);

/// Total variation: sum of absolute forward differences along both axes.
double total_variation(const Grid& g);

} // namespace spinex
