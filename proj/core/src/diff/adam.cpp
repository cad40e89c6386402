#include "nqr/diff/adam.hpp"

#include <cmath>

#include "nqr/error.hpp"

namespace nqr::diff {

void Adam::step(std::span<const ParamRef> params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.value.size(), 0.0);
      v_.emplace_back(p.value.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) fail(ErrorCode::kShapeMismatch, "Adam: parameter block count changed");
  ++step_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& p = params[k];
    auto& m = m_[k];
    auto& v = v_[k];
    if (p.value.size() != m.size() || p.grad.size() != m.size()) {
      fail(ErrorCode::kShapeMismatch, "Adam: block " + std::to_string(k) + " changed size");
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double g = p.grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p.value[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

}  // namespace nqr::diff
