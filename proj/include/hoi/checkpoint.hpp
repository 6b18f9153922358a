#pragma once

#include <string>

#include "hoi/network.hpp"

namespace hoi {

// Flat binary tensor container:
//   magic "HOICKPT1" (8 bytes), version u32 = 1, dtype u32 (0 = f32, 1 = f64),
//   tensor count u32, then per tensor: name length u32, name bytes,
//   rows u32, cols u32, row-major little-endian payload.
// Model checkpoints are written as f32; the f64 flavour carries full training
// state (weights + optimizer moments) for exact resume.
enum class CheckpointDtype : uint32_t { f32 = 0, f64 = 1 };

void save_checkpoint(const std::string& path, const ParamStore& store,
                     CheckpointDtype dtype = CheckpointDtype::f32);
ParamStore load_checkpoint(const std::string& path);

}  // namespace hoi
