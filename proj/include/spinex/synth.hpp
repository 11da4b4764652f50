#pragma once

#include "spinex/image.hpp"
#include "spinex/rng.hpp"

namespace spinex {

/// Procedural frontal chest radiograph stand-in: thorax, lungs, a midline
/// vertebra column with low-contrast segment structure, ribs, heart shadow,
/// acquisition blur, noise, and contrast compression. Values in [0, 1].
/// Deterministic for a given generator state.
Grid make_radiograph(Rng& rng, int height, int width);

/// Natural-image stand-in with mixed smooth regions, edges and blobs;
/// used to train and exercise the no-reference quality models.
Grid make_texture(Rng& rng, int height, int width);

/// Smooth low-contrast image whose intensities occupy a narrow band.
Grid make_low_contrast(Rng& rng, int height, int width);

/// Additive Gaussian noise, clamped to [0, 1].
Grid add_noise(const Grid& img, double sigma, Rng& rng);

/// Contrast compression toward the midpoint: 0.5 + factor * (v - 0.5).
Grid compress_contrast(const Grid& img, double factor);

} // namespace spinex
