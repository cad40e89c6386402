#include "nqr/diff/checkpoint.hpp"

#include <cmath>
#include <fstream>

#include "nqr/binary_io.hpp"
#include "nqr/error.hpp"

namespace nqr::diff {

namespace {

constexpr std::string_view kMagic{"NQRCKPT\0", 8};

void write_string(std::ostream& out, const std::string& s) {
  io::write_u32(out, static_cast<std::uint32_t>(s.size()));
  io::write_bytes(out, s);
}

std::string read_string(std::istream& in) {
  const auto n = io::read_u32(in);
  if (n > (1u << 20)) fail(ErrorCode::kLoad, "checkpoint string too long");
  return io::read_bytes(in, n);
}

}  // namespace

const Tensor2& Checkpoint::get(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t.tensor;
  }
  fail(ErrorCode::kLoad, "checkpoint has no tensor '" + name + "'");
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  io::write_bytes(out, kMagic);
  io::write_u32(out, kCheckpointVersion);
  io::write_u32(out, static_cast<std::uint32_t>(ckpt.metadata.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    write_string(out, k);
    write_string(out, v);
  }
  io::write_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    write_string(out, t.name);
    io::write_u64(out, t.tensor.rows);
    io::write_u64(out, t.tensor.cols);
    for (double v : t.tensor.data) io::write_f64(out, v);
  }
  if (!out) fail(ErrorCode::kIo, "write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  if (io::read_bytes(in, kMagic.size()) != kMagic) fail(ErrorCode::kLoad, path + ": not a checkpoint");
  const auto version = io::read_u32(in);
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kLoad, path + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto n_meta = io::read_u32(in);
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto k = read_string(in);
    ckpt.metadata[k] = read_string(in);
  }
  const auto n_tensors = io::read_u32(in);
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    NamedTensor t;
    t.name = read_string(in);
    const auto rows = io::read_u64(in);
    const auto cols = io::read_u64(in);
    if (rows * cols > (1ull << 32)) fail(ErrorCode::kLoad, path + ": tensor '" + t.name + "' too large");
    t.tensor = Tensor2(rows, cols);
    for (auto& v : t.tensor.data) {
      v = io::read_f64(in);
      if (!std::isfinite(v)) fail(ErrorCode::kLoad, path + ": non-finite value in '" + t.name + "'");
    }
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

}  // namespace nqr::diff
