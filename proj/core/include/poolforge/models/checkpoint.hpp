#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "poolforge/layers/params.hpp"
#include "poolforge/models/model_config.hpp"

namespace poolforge::models {

// Checkpoint container, little-endian:
//
//   "PFCK"                       magic
//   u16 version                  currently 1
//   u32 header_length, header    UTF-8 JSON: {"model": {...}, "metadata": {...}}
//   u32 tensor_count
//   tensor_count times:
//     u8  kind                   0 parameter, 1 buffer, 2 optimizer state
//     u32 name_length, name
//     u8  dtype                  8 = float64, 4 = float32
//     u32 rank, u32 dims[rank]
//     raw row-major values
//
// Writers always emit float64 so a save/load cycle is bit-exact.
inline constexpr char kCheckpointMagic[4] = {'P', 'F', 'C', 'K'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig model;
  layers::ParamStore params;
  std::map<std::string, Tensor> optimizer;
  // JSON object text owned by the writer (trainer state); "{}" when unused.
  std::string metadata = "{}";
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::string& bytes);

// Throws ConfigError unless the stored parameters and buffers are exactly
// the ones the stored model config needs (names and shapes).
void check_compatible(const Checkpoint& checkpoint);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace poolforge::models
