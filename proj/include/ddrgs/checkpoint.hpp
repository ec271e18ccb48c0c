#pragma once

#include "ddrgs/scene.hpp"
#include "ddrgs/tone_mapper.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ddrgs {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// A scene plus the camera presets (training poses) served to clients.
struct Checkpoint {
  DdrScene scene;
  std::vector<Camera> cameras;
  ToneDomain tone_domain = ToneDomain::log;  // input space the tone mapper was trained in
};

/// Container: "DDRS", u32 version, then sections [u32 tag][u64 length][payload]
/// (CONF, PNTS, TONE, optional CAMS), then a SHA-256 of every preceding byte.
/// All numbers little-endian; reals are IEEE binary64, so the round trip is lossless.
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

using Sha256 = std::array<std::uint8_t, 32>;
Sha256 sha256(const std::uint8_t* data, std::size_t size);
std::string to_hex(const Sha256& digest);

/// Hex digest stored in a checkpoint's trailer (verified first).
std::string checkpoint_digest(const std::vector<std::uint8_t>& bytes);

}  // namespace ddrgs
