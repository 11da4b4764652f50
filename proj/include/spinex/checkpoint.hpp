#pragma once

#include "spinex/net.hpp"

#include <string>

namespace spinex {

/// Versioned binary checkpoint container: a JSON header (spec, spec hash,
/// training metadata, tensor directory) followed by raw little-endian
/// 32-bit float tensor data. Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const NetParams& params);
NetParams load_checkpoint(const std::string& path);

} // namespace spinex
