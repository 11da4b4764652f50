#pragma once

#include "spinex/image.hpp"

#include <array>

namespace spinex {

inline constexpr int kEntropyBins = 256;

/// 256-bin gray-level histogram over [0, 1]; values outside are clamped
/// into the first/last bin.
std::array<double, kEntropyBins> gray_histogram(const Grid& img);

/// Shannon entropy of the gray-level histogram, in bits. Range [0, 8].
double entropy(const Grid& img);

} // namespace spinex
