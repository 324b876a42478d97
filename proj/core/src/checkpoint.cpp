#include "codql/checkpoint.hpp"

#include "codql/binary_io.hpp"
#include "codql/errors.hpp"

namespace codql::harness {

Checkpoint make_checkpoint(const agents::Learner& learner, std::uint64_t config_digest,
                           int episode) {
  Checkpoint c;
  c.algorithm = learner.config().algorithm;
  c.config_digest = config_digest;
  c.n_agents = learner.n_agents();
  c.lane_capacity = learner.lane_capacity();
  c.episode = episode;
  c.online = learner.online();
  c.target = learner.target();
  c.ucb = learner.ucb();
  return c;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.tag("CDQLCKPT");
  w.u32(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(ckpt.algorithm));
  const auto& spec = ckpt.online.spec;
  w.u32(static_cast<std::uint32_t>(spec.input_dim));
  w.u32(static_cast<std::uint32_t>(spec.output_dim));
  w.u32(static_cast<std::uint32_t>(spec.hidden.size()));
  for (int h : spec.hidden) w.u32(static_cast<std::uint32_t>(h));
  w.u8(spec.relu_output ? 1 : 0);
  w.u64(ckpt.config_digest);
  w.i32(ckpt.n_agents);
  w.i32(ckpt.lane_capacity);
  w.i32(ckpt.episode);
  w.blob(nn::serialize(ckpt.online));
  w.blob(nn::serialize(ckpt.target));
  w.u8(ckpt.ucb ? 1 : 0);
  if (ckpt.ucb) ckpt.ucb->write(w);
  seal_with_checksum(w);
  return w.take();
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(verify_checksum(bytes, "checkpoint"));
  r.expect_tag("CDQLCKPT", "checkpoint");
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint c;
  const auto algo = r.u8();
  if (algo > static_cast<std::uint8_t>(agents::Algorithm::IQL)) {
    throw FormatError("checkpoint: unknown algorithm id");
  }
  c.algorithm = static_cast<agents::Algorithm>(algo);
  nn::NetSpec spec;
  spec.input_dim = static_cast<int>(r.u32());
  spec.output_dim = static_cast<int>(r.u32());
  spec.hidden.resize(r.count(4));
  for (int& h : spec.hidden) h = static_cast<int>(r.u32());
  spec.relu_output = r.u8() != 0;
  c.config_digest = r.u64();
  c.n_agents = r.i32();
  c.lane_capacity = r.i32();
  c.episode = r.i32();
  c.online = nn::deserialize(r.blob());
  c.target = nn::deserialize(r.blob());
  if (!(c.online.spec == spec) || !(c.target.spec == spec)) {
    throw FormatError("checkpoint: header shape disagrees with the parameter blobs");
  }
  if (r.u8() != 0) c.ucb = agents::UcbCounts::read(r);
  if (!r.at_end()) throw FormatError("checkpoint: trailing bytes");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file(path));
}

agents::Learner restore_learner(const Checkpoint& ckpt, agents::LearnerConfig config,
                                int n_agents, int lane_capacity) {
  if (ckpt.n_agents != n_agents) {
    throw FormatError("checkpoint has " + std::to_string(ckpt.n_agents) +
                      " agents, configuration has " + std::to_string(n_agents));
  }
  if (ckpt.lane_capacity != lane_capacity) {
    throw FormatError("checkpoint lane capacity differs from the configuration");
  }
  config.algorithm = ckpt.algorithm;
  config.hidden = ckpt.online.spec.hidden;
  config.relu_output = ckpt.online.spec.relu_output;
  agents::Learner learner(config, n_agents, lane_capacity, 0);
  learner.load(ckpt.online, ckpt.target, ckpt.ucb);
  return learner;
}

}  // namespace codql::harness
