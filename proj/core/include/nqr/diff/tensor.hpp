#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nqr::diff {

// Row-major dense matrix of doubles.
struct Tensor2 {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor2() = default;
  Tensor2(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Tensor2(std::size_t r, std::size_t c, std::vector<double> values);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return std::span<double>(data).subspan(r * cols, cols); }
  std::span<const double> row(std::size_t r) const { return std::span<const double>(data).subspan(r * cols, cols); }
  std::size_t size() const { return data.size(); }
  void fill(double v);

  bool operator==(const Tensor2&) const = default;
};

// a * b
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
// a * b^T
Tensor2 matmul_bt(const Tensor2& a, const Tensor2& b);
// a^T * b
Tensor2 matmul_at(const Tensor2& a, const Tensor2& b);
// out += a^T * b
void add_matmul_at(Tensor2& out, const Tensor2& a, const Tensor2& b);

// Row-wise softmax, max-shifted.
Tensor2 softmax_rows(const Tensor2& x);
void softmax(std::span<const double> x, std::span<double> out);
// log-sum-exp of a vector, max-shifted.
double logsumexp(std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);

void check_finite(const Tensor2& t, const char* what);

}  // namespace nqr::diff
