#pragma once

#include <cstdint>
#include <string>

#include "racer/params.hpp"

namespace racer::train {

inline constexpr std::uint32_t kCheckpointMagic = 0x52414345;  // "RACE"
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Self-describing binary container: magic, format version, then length-
/// prefixed named float64 tensors. Used for full training state (all
/// network parameter sets, optimizer moments, limits and grid metadata,
/// stored as namespaced entries in one flat ParamSet).
void write_param_file(const std::string& path, const nn::ParamSet& params);

/// Throws std::runtime_error on I/O failure, bad magic, or version mismatch.
nn::ParamSet read_param_file(const std::string& path);

}  // namespace racer::train
