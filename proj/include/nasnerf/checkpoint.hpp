#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nasnerf/descriptor.hpp"
#include "nasnerf/field.hpp"
#include "nasnerf/optimizer.hpp"

namespace nasnerf {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<float> values;
};

// On-disk layout (all integers little-endian):
//   "NNRFCKPT" | u32 format version | u32 header length | header JSON
//   | u32 tensor count | per tensor: u32 name length, name, u32 rank,
//   u64 dims[rank], f32 values[prod(dims)]
// The header JSON holds format_version, architecture, step, optimizer and an
// optional run_config object.
struct Checkpoint {
  std::uint32_t format_version = kCheckpointFormatVersion;
  ArchitectureDescriptor architecture;
  std::uint64_t step = 0;
  OptimizerConfig optimizer;
  std::string run_config_json = "{}";
  std::vector<NamedTensor> tensors;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Tensors are named "<coarse|fine>.<trunk|density|radiance>.<layer>.<weight|bias>".
Checkpoint make_checkpoint(const NerfModel<float>& model, std::uint64_t step, const OptimizerConfig& optimizer,
                           const std::string& run_config_json = "{}");
NerfModel<float> restore_model(const Checkpoint& ckpt);

}  // namespace nasnerf
