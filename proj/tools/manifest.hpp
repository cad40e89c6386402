#pragma once

#include <chrono>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace nqr::cli {

// Record of one CLI run: what was asked for, what was read and what was
// written. Written next to the primary output.
class RunManifest {
 public:
  explicit RunManifest(std::string command);

  void set_config(std::string toml) { config_ = std::move(toml); }
  void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
  // Hashes the file now, before anything can overwrite it.
  void input(const std::string& role, const std::string& path);
  void output(const std::string& role, const std::string& path) { outputs_[role] = path; }

  nlohmann::json to_json() const;
  void write(const std::string& path) const;

 private:
  std::string command_;
  std::string config_;
  nlohmann::json seeds_ = nlohmann::json::object();
  nlohmann::json inputs_ = nlohmann::json::object();
  nlohmann::json outputs_ = nlohmann::json::object();
  std::chrono::steady_clock::time_point start_;
  std::string started_;
};

}  // namespace nqr::cli
