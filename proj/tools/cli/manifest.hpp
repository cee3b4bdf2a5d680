#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace ehub::cli {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& file);

/// Record of one command run: what went in, what came out, and how long it
/// took. Everything except `timing` is a function of the inputs.
class RunManifest {
 public:
  RunManifest(std::string command, nlohmann::ordered_json options);

  void add_input(const std::filesystem::path& file);
  /// Writes `bytes` to dir/name and records its hash.
  void write_output(const std::filesystem::path& dir, const std::string& name, const std::string& bytes);
  void set_seconds(double seconds) { seconds_ = seconds; }

  std::string to_json() const;
  void save(const std::filesystem::path& dir) const;

 private:
  std::string command_;
  nlohmann::ordered_json options_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
  double seconds_ = 0;
};

}  // namespace ehub::cli
