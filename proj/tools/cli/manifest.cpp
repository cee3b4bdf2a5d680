#include "manifest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace ehub::cli {

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw std::runtime_error("SHA-256 computation failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return hex.str();
}

std::string sha256_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + file.string() + "'");
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return sha256_hex(bytes.str());
}

RunManifest::RunManifest(std::string command, nlohmann::ordered_json options)
    : command_(std::move(command)), options_(std::move(options)) {}

void RunManifest::add_input(const std::filesystem::path& file) {
  const std::string name = file.lexically_normal().generic_string();
  for (const auto& [path, hash] : inputs_)
    if (path == name) return;
  inputs_.emplace_back(name, sha256_file(file));
}

void RunManifest::write_output(const std::filesystem::path& dir, const std::string& name, const std::string& bytes) {
  const auto path = dir / name;
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << bytes;
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  outputs_.emplace_back(name, sha256_hex(bytes));
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "ehub";
  j["version"] = "0.1.0";
  j["command"] = command_;
  j["options"] = options_;
  auto files = [](const auto& list) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& [path, hash] : list) arr.push_back({{"path", path}, {"sha256", hash}});
    return arr;
  };
  j["inputs"] = files(inputs_);
  j["outputs"] = files(outputs_);
  j["timing"] = {{"seconds", seconds_}};
  return j.dump(2) + "\n";
}

void RunManifest::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  out << to_json();
  if (!out) throw std::runtime_error("cannot write manifest in '" + dir.string() + "'");
}

}  // namespace ehub::cli
