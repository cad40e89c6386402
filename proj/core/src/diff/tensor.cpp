#include "nqr/diff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nqr/error.hpp"

namespace nqr::diff {

Tensor2::Tensor2(std::size_t r, std::size_t c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != r * c) fail(ErrorCode::kShapeMismatch, "tensor data does not match shape");
}

void Tensor2::fill(double v) { std::fill(data.begin(), data.end(), v); }

namespace {

void shape_fail(const char* op, const Tensor2& a, const Tensor2& b) {
  fail(ErrorCode::kShapeMismatch, std::string(op) + ": " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                                      " vs " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
}

}  // namespace

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  if (a.cols != b.rows) shape_fail("matmul", a, b);
  Tensor2 out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* o = &out.data[i * out.cols];
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double s = a(i, k);
      const double* br = &b.data[k * b.cols];
      for (std::size_t j = 0; j < b.cols; ++j) o[j] += s * br[j];
    }
  }
  return out;
}

Tensor2 matmul_bt(const Tensor2& a, const Tensor2& b) {
  if (a.cols != b.cols) shape_fail("matmul_bt", a, b);
  Tensor2 out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.rows; ++j) out(i, j) = dot(a.row(i), b.row(j));
  }
  return out;
}

Tensor2 matmul_at(const Tensor2& a, const Tensor2& b) {
  Tensor2 out(a.cols, b.cols);
  add_matmul_at(out, a, b);
  return out;
}

void add_matmul_at(Tensor2& out, const Tensor2& a, const Tensor2& b) {
  if (a.rows != b.rows || out.rows != a.cols || out.cols != b.cols) shape_fail("matmul_at", a, b);
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double* ar = &a.data[k * a.cols];
    const double* br = &b.data[k * b.cols];
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double s = ar[i];
      if (s == 0.0) continue;
      double* o = &out.data[i * out.cols];
      for (std::size_t j = 0; j < b.cols; ++j) o[j] += s * br[j];
    }
  }
}

void softmax(std::span<const double> x, std::span<double> out) {
  if (x.empty()) return;
  const double m = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - m);
    z += out[i];
  }
  for (std::size_t i = 0; i < x.size(); ++i) out[i] /= z;
}

Tensor2 softmax_rows(const Tensor2& x) {
  Tensor2 out(x.rows, x.cols);
  for (std::size_t r = 0; r < x.rows; ++r) softmax(x.row(r), out.row(r));
  return out;
}

double logsumexp(std::span<const double> x) {
  if (x.empty()) return -INFINITY;
  const double m = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (double v : x) z += std::exp(v - m);
  return m + std::log(z);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_finite(const Tensor2& t, const char* what) {
  for (double v : t.data) {
    if (!std::isfinite(v)) fail(ErrorCode::kInvalidArgument, std::string(what) + ": non-finite value");
  }
}

}  // namespace nqr::diff
