#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "codql/learner.hpp"
#include "codql/nn.hpp"
#include "codql/ucb.hpp"

namespace codql::harness {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Container layout (little-endian):
///   "CDQLCKPT" u32 version, u8 algorithm, u32 input_dim, u32 output_dim,
///   u32 n_hidden, u32 hidden[n_hidden], u8 relu_output, u64 config digest,
///   i32 n_agents, i32 lane_capacity, i32 episode,
///   blob online params, blob target params, u8 has_ucb [, ucb table],
///   u64 checksum
struct Checkpoint {
  agents::Algorithm algorithm = agents::Algorithm::CoDQL;
  std::uint64_t config_digest = 0;
  int n_agents = 0;
  int lane_capacity = 0;
  int episode = 0;  // training episodes completed
  nn::QNetParams online;
  nn::QNetParams target;
  std::optional<agents::UcbCounts> ucb;
};

Checkpoint make_checkpoint(const agents::Learner& learner, std::uint64_t config_digest, int episode);

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError on corruption or a version mismatch.
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Learner restored from `ckpt`, using `config` for everything except the
/// algorithm, which comes from the checkpoint. Throws FormatError when the
/// network shape or agent count disagrees with the configuration.
agents::Learner restore_learner(const Checkpoint& ckpt, agents::LearnerConfig config,
                                int n_agents, int lane_capacity);

}  // namespace codql::harness
