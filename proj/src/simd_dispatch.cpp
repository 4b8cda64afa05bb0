#include "ease/simd.hpp"

#include <cstdlib>
#include <mutex>

#include "ease/common.hpp"

namespace ease::simd {

namespace {

Backend g_backend = Backend::kScalar;
std::once_flag g_init;

Backend pick_backend() {
  const char* env = std::getenv("EASE_SIMD");
  if (env != nullptr) {
    const std::string v(env);
    if (v == "scalar") return Backend::kScalar;
    if (v == "avx2") {
      if (!detail::cpu_has_avx2()) {
        throw ConfigError("EASE_SIMD=avx2 requested but CPU lacks AVX2/FMA");
      }
      return Backend::kAvx2;
    }
    throw ConfigError("EASE_SIMD must be 'scalar' or 'avx2', got '" + v + "'");
  }
  return detail::cpu_has_avx2() ? Backend::kAvx2 : Backend::kScalar;
}

void ensure_init() {
  std::call_once(g_init, [] { g_backend = pick_backend(); });
}

}  // namespace

Backend active_backend() {
  ensure_init();
  return g_backend;
}

std::string active_backend_name() {
  return active_backend() == Backend::kAvx2 ? "avx2" : "scalar";
}

void force_backend(Backend b) {
  ensure_init();
  if (b == Backend::kAvx2 && !detail::cpu_has_avx2()) {
    throw ConfigError("cannot force AVX2 backend: CPU lacks AVX2/FMA");
  }
  g_backend = b;
}

void exp_inplace(double* x, std::size_t n) {
  if (active_backend() == Backend::kAvx2) {
    detail::exp_inplace_avx2(x, n);
  } else {
    detail::exp_inplace_scalar(x, n);
  }
}

void exp_scale_inplace(double* x, std::size_t n, double scale) {
  if (active_backend() == Backend::kAvx2) {
    detail::exp_scale_inplace_avx2(x, n, scale);
  } else {
    detail::exp_scale_inplace_scalar(x, n, scale);
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  return active_backend() == Backend::kAvx2 ? detail::dot_avx2(a, b, n)
                                            : detail::dot_scalar(a, b, n);
}

double sum(const double* x, std::size_t n) {
  return active_backend() == Backend::kAvx2 ? detail::sum_avx2(x, n)
                                            : detail::sum_scalar(x, n);
}

}  // namespace ease::simd
