#include "nqr/diff/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "nqr/error.hpp"

namespace nqr::diff {

GradCheckResult grad_check(const std::function<double()>& f, std::span<const GradBlock> blocks, double h,
                           double floor) {
  GradCheckResult result;
  for (const auto& block : blocks) {
    if (block.values.size() != block.analytic.size()) {
      fail(ErrorCode::kShapeMismatch, "grad_check: block '" + block.name + "' size mismatch");
    }
    for (std::size_t i = 0; i < block.values.size(); ++i) {
      const double saved = block.values[i];
      block.values[i] = saved + h;
      const double up = f();
      block.values[i] = saved - h;
      const double down = f();
      block.values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = block.analytic[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      const double err = std::abs(analytic - numeric) / denom;
      ++result.checked;
      if (err > result.max_relative_error || !std::isfinite(err)) {
        result.max_relative_error = err;
        result.worst_block = block.name;
        result.worst_index = i;
        result.analytic = analytic;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace nqr::diff
