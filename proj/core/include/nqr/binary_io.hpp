#pragma once

// Little-endian primitives shared by the embedding, score and checkpoint
// file formats.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace nqr::io {

void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f32(std::ostream& out, float v);
void write_f64(std::ostream& out, double v);
void write_bytes(std::ostream& out, std::string_view bytes);

std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
float read_f32(std::istream& in);
double read_f64(std::istream& in);
std::string read_bytes(std::istream& in, std::size_t n);

// 64-bit FNV-1a; used for vocabulary fingerprints and run-manifest input hashes.
class Fnv1a {
 public:
  void update(std::string_view bytes);
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 1469598103934665603ull;
};

std::uint64_t hash_file(const std::string& path);
std::string hex64(std::uint64_t v);

}  // namespace nqr::io
