#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nqr::diff {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// A parameter block and its gradient.
struct ParamRef {
  std::span<double> value;
  std::span<const double> grad;
};

// Adam with bias correction. Moments are kept per block, in the order the
// blocks are passed; the block list must not change between steps.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(std::span<const ParamRef> params);
  std::uint64_t steps() const { return step_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace nqr::diff
