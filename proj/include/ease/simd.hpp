#pragma once

#include <cstddef>
#include <string>

// Vectorized inner-loop kernels with runtime dispatch.
//
// Every routine has a scalar reference implementation and an AVX2+FMA
// variant; the backend is picked once at startup from CPUID and can be
// forced through the EASE_SIMD environment variable ("scalar" | "avx2")
// or simd::force_backend(). The two variants agree to a few ulps; the
// equivalence suite in tests/test_simd.cpp pins that down.
namespace ease::simd {

enum class Backend { kScalar, kAvx2 };

Backend active_backend();
std::string active_backend_name();

// Forces a backend; throws ConfigError if the CPU cannot run it.
void force_backend(Backend b);

// x[i] = exp(x[i])
void exp_inplace(double* x, std::size_t n);

// x[i] = exp(scale * x[i]); the fused form used for kernel weights,
// where x holds squared distances and scale = -1/(2h^2) or -gamma.
void exp_scale_inplace(double* x, std::size_t n, double scale);

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);

namespace detail {
void exp_inplace_scalar(double* x, std::size_t n);
void exp_scale_inplace_scalar(double* x, std::size_t n, double scale);
double dot_scalar(const double* a, const double* b, std::size_t n);
double sum_scalar(const double* x, std::size_t n);

bool cpu_has_avx2();
void exp_inplace_avx2(double* x, std::size_t n);
void exp_scale_inplace_avx2(double* x, std::size_t n, double scale);
double dot_avx2(const double* a, const double* b, std::size_t n);
double sum_avx2(const double* x, std::size_t n);
}  // namespace detail

}  // namespace ease::simd
