#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "srtg/harness/trainer.hpp"

namespace srtg::harness {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ChecksumError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class VersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

using NamedArrays = std::vector<std::pair<std::string, std::vector<double>>>;

/// Everything needed to continue a run: the effective configuration text,
/// parameters, batch-norm statistics, momentum buffers and history.
struct Checkpoint {
  std::string config;
  std::uint64_t epoch = 0;
  NamedArrays params;
  NamedArrays buffers;
  std::vector<std::vector<double>> velocity;  // aligned with params
  History history;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

Checkpoint capture(backbone::Network& net, const Sgd* optimizer, const History& history,
                   std::string config);
/// Copies state into a network built from the same spec (and optimizer, if
/// given). Names and sizes must match exactly.
void restore(const Checkpoint& ck, backbone::Network& net, Sgd* optimizer);

/// "SRTGCKPT", u32 version, payload, crc32 of everything before it.
std::string encode(const Checkpoint& ck);
Checkpoint decode(std::string_view bytes);

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace srtg::harness
