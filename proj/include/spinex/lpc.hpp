#pragma once

#include "spinex/image.hpp"

namespace spinex {

/// Parameters of the local-phase-coherence sharpness index.
struct LpcParams {
  int n_scales = 3;         ///< log-Gabor scales, center frequencies in ratio 1:2:4
  int n_orients = 8;        ///< filter orientations
  double stability_c = 2.0; ///< stabilizer in the orientation pooling
  double rank_decay = 1e-4; ///< decay speed of the rank-ordered pooling weights

  void validate() const;
};

/// Sharpness index from local phase coherence across log-Gabor scales.
/// Complex filter responses are computed in the frequency domain; phase
/// coherence at each location/orientation is the cosine of the three-scale
/// phase-prediction residual, pooled over orientations with finest-scale
/// magnitude weights, then over space with rank-decayed weights so the
/// strongest coherence values dominate. Higher means sharper.
/// Requires an image of at least 64x64.
double lpc_si(const Grid& img, const LpcParams& p = {});

} // namespace spinex
