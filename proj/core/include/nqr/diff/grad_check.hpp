#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

namespace nqr::diff {

struct GradBlock {
  std::string name;
  std::span<double> values;          // perturbed in place, restored afterwards
  std::span<const double> analytic;  // gradient of f at the unperturbed point
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_block;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

// Central differences (f(x+h) - f(x-h)) / 2h on every coordinate of every
// block. Relative error is |a - n| / max(|a|, |n|, floor).
GradCheckResult grad_check(const std::function<double()>& f, std::span<const GradBlock> blocks, double h = 1e-4,
                           double floor = 1e-6);

}  // namespace nqr::diff
