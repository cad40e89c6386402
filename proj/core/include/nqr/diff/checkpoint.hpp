#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nqr/diff/tensor.hpp"

namespace nqr::diff {

struct NamedTensor {
  std::string name;
  Tensor2 tensor;
};

struct Checkpoint {
  std::map<std::string, std::string> metadata;
  std::vector<NamedTensor> tensors;

  const Tensor2& get(const std::string& name) const;  // throws kLoad when absent
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout: magic "NQRCKPT\0", u32 version, u32 metadata count, then (u32 len,
// key, u32 len, value) pairs, u32 tensor count, then per tensor (u32 len,
// name, u64 rows, u64 cols, rows*cols f64), all little-endian.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace nqr::diff
