#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "srtg/backbone/spec.hpp"
#include "srtg/harness/synthetic.hpp"
#include "srtg/harness/trainer.hpp"

namespace srtg::harness {

/// Unknown key, malformed value or inconsistent settings.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sectioned key = value settings ([data], [network], [train]). Every key has
/// a default; files and overrides may only replace known keys. Values are
/// kept verbatim, so to_ini() round-trips exactly.
class Config {
 public:
  /// The built-in defaults: the forward-vs-reversed toy task.
  Config();

  static Config from_file(const std::filesystem::path& path);
  static Config from_string(const std::string& text);

  /// "section.key=value".
  void set(std::string_view assignment);
  void set(const std::string& key, std::string value);
  const std::string& get(const std::string& key) const;
  bool has(const std::string& key) const;

  std::string to_ini() const;

  SyntheticSpec data() const;
  backbone::NetworkSpec network() const;
  TrainConfig train() const;
  /// Resolves and validates all three sections.
  void validate() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;  // "section.key" -> value
};

}  // namespace srtg::harness
