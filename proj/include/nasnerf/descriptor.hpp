#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

namespace nasnerf {

// (D1, D2, D3) / (C1, C2, C3) of one density-estimator cell. D2 is always 1.
struct FieldCellConfig {
  std::array<int, 3> depths{2, 1, 1};
  std::array<int, 3> channels{16, 16, 16};

  // Throws ConfigError naming the first violated invariant.
  void validate() const;

  friend bool operator==(const FieldCellConfig&, const FieldCellConfig&) = default;
  friend auto operator<=>(const FieldCellConfig&, const FieldCellConfig&) = default;
};

inline constexpr int kDescriptorSchemaVersion = 1;

// Coarse + fine cells and the fixed encoder / radiance-head settings.
struct ArchitectureDescriptor {
  int schema_version = kDescriptorSchemaVersion;
  FieldCellConfig coarse;
  FieldCellConfig fine;
  int pos_enc_L = 10;
  int dir_enc_L = 4;
  int head_width = 128;

  void validate() const;

  friend bool operator==(const ArchitectureDescriptor&, const ArchitectureDescriptor&) = default;
  friend auto operator<=>(const ArchitectureDescriptor&, const ArchitectureDescriptor&) = default;
};

// Two 8x256 fields with the skip at layer 4, written as the cell (4,1,3)x256.
ArchitectureDescriptor baseline_descriptor();

// Canonical text: fixed key order, two-space indent, trailing newline.
std::string to_canonical_json(const ArchitectureDescriptor& d);
// Throws ConfigError on malformed JSON, missing keys or a schema mismatch.
ArchitectureDescriptor parse_descriptor(const std::string& text);

void save_descriptor(const ArchitectureDescriptor& d, const std::filesystem::path& path);
ArchitectureDescriptor load_descriptor(const std::filesystem::path& path);

// FNV-1a over the canonical text; stable across runs and platforms.
std::uint64_t descriptor_hash(const ArchitectureDescriptor& d);

// Short human-readable form, e.g. "c[2,1,1]x[9,11,12] f[2,1,1]x[16,18,20]".
std::string describe(const ArchitectureDescriptor& d);

}  // namespace nasnerf
