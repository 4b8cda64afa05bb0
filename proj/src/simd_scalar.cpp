#include "ease/simd.hpp"

#include <cmath>

namespace ease::simd::detail {

void exp_inplace_scalar(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::exp(x[i]);
}

void exp_scale_inplace_scalar(double* x, std::size_t n, double scale) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::exp(scale * x[i]);
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

}  // namespace ease::simd::detail
