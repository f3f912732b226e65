#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "crossfuse/network.hpp"

namespace crossfuse {

inline constexpr char kCheckpointMagic[9] = "XFCKPT01";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Self-describing checkpoint: magic, version, JSON header (mode, spec,
/// metadata, tensor table), little-endian float64 payload, FNV-1a 64 checksum.
/// The byte layout is documented in docs/formats.md.
std::vector<std::uint8_t> serialize(const FusionNetwork& net);
/// Throws ChecksumError on corruption and VersionError on an unknown version
/// or a tensor table that does not match the stored spec.
FusionNetwork deserialize(std::span<const std::uint8_t> bytes);

void save_checkpoint(const FusionNetwork& net, const std::filesystem::path& path);
FusionNetwork load_checkpoint(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

/// JSON text of a NetworkSpec (used by checkpoints and reports).
std::string spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const std::string& text);

}  // namespace crossfuse
