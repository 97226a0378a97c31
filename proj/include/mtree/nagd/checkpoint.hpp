#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "mtree/nagd/model.hpp"

namespace mtree::nagd {

// Binary layout, all integers and floats little-endian:
//
//   magic     8 bytes  "NAGDCKPT"
//   version   u32      1
//   hyper     i32 d_model, heads, ffn, encoder_layers, depth_cap
//             f64 focal_gamma, type_weight
//             u8  cross_goal
//   vocab     u32 count, then count strings
//   constants u32 count, then count strings (exact rational text)
//   tensors   u32 count, then per tensor: string name, u32 rows, u32 cols,
//             rows*cols f64 in row-major order
//
// A string is a u32 byte length followed by the bytes. Optimizer moments
// are not stored.

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Model& model, std::ostream& out);
void save_checkpoint(const Model& model, const std::string& path);

/// Throws InputError on a bad magic, unknown version, truncated file or a
/// tensor whose name or shape does not match the model it describes.
Model load_checkpoint(std::istream& in);
Model load_checkpoint(const std::string& path);

}  // namespace mtree::nagd
