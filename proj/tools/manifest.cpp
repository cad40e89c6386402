#include "manifest.hpp"

#include <ctime>
#include <fstream>

#include "nqr/binary_io.hpp"
#include "nqr/error.hpp"

namespace nqr::cli {

namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunManifest::RunManifest(std::string command)
    : command_(std::move(command)), start_(std::chrono::steady_clock::now()), started_(utc_now()) {}

void RunManifest::input(const std::string& role, const std::string& path) {
  if (path.empty()) return;
  inputs_[role] = {{"path", path}, {"fnv1a", io::hex64(io::hash_file(path))}};
}

nlohmann::json RunManifest::to_json() const {
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  return {{"command", command_}, {"config", config_},          {"seeds", seeds_},
          {"inputs", inputs_},   {"outputs", outputs_},         {"started", started_},
          {"wall_clock_seconds", wall}};
}

void RunManifest::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out << to_json().dump(2) << '\n';
}

}  // namespace nqr::cli
