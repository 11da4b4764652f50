#include "spinex/net.hpp"

#include <cmath>
#include <cstdio>

namespace spinex {

void NetSpec::validate() const {
  if (depth < 2) throw std::invalid_argument("NetSpec: depth must be >= 2");
  if (base_channels < 8) throw std::invalid_argument("NetSpec: base_channels must be >= 8");
  if (!(fusion_beta >= 0.0 && fusion_beta <= 1.0)) {
    throw std::invalid_argument("NetSpec: fusion_beta must be in [0, 1]");
  }
  if (!(activation_slope > 0.0)) {
    throw std::invalid_argument("NetSpec: activation_slope must be > 0");
  }
}

int NetSpec::channels_at(int level) const {
  return base_channels << (level - 1);
}

std::string NetSpec::canonical() const {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "depth=%d;base=%d;beta=%.9g;slope=%.9g", depth, base_channels,
                fusion_beta, activation_slope);
  return buf;
}

std::uint64_t NetSpec::hash() const {
  // FNV-1a over the canonical form.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : canonical()) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void NetParams::validate() const {
  spec.validate();
  if (spec_hash != spec.hash()) {
    throw ConfigError("NetParams: stored spec hash " + std::to_string(spec_hash) +
                      " disagrees with spec (" + std::to_string(spec.hash()) + ")");
  }
  for (const auto& t : tensors) {
    for (const float v : t.data) {
      if (!std::isfinite(v)) {
        throw ConfigError("NetParams: tensor '" + t.name + "' contains non-finite values");
      }
    }
  }
}

} // namespace spinex
