#pragma once

#include <filesystem>

#include "colloc/model.hpp"

namespace colloc {

// Binary checkpoint, little-endian:
//   magic "COLLOCKP" | u32 version (=1)
//   u32 n_layers | u32 n_heads | u32 d_model | u32 vocab_size | u32 context_length
//   u32 tensor_count, then per tensor:
//     u32 name_len | name bytes | u32 ndim | u32 dims[ndim] | f32 data[prod(dims)] (row-major)
inline constexpr char kCheckpointMagic[8] = {'C', 'O', 'L', 'L', 'O', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Parameters<float>& params, const std::filesystem::path& path);
Parameters<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace colloc
