// Compiled with -mavx2 -mfma. Nothing in here may run unless
// isa_supported(Isa::avx2) returned true.

#include "adx/kernels/kernels.hpp"

#include <cassert>
#include <cstring>
#include <immintrin.h>

namespace adx::kernels::avx2 {

namespace {

constexpr std::size_t kLanes = 4;

double horizontal_sum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  const std::size_t n = a.size();
  const std::size_t simd_end = n - n % (2 * kLanes);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  for (std::size_t i = 0; i < simd_end; i += 2 * kLanes) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i]), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i + kLanes]),
                           _mm256_loadu_pd(&b[i + kLanes]), acc1);
  }
  double result = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (std::size_t i = simd_end; i < n; ++i) result += a[i] * b[i];
  return result;
}

DotPair dot2(std::span<const double> w, std::span<const double> a,
             std::span<const double> b) {
  assert(w.size() == a.size() && w.size() == b.size());
  const std::size_t n = w.size();
  const std::size_t simd_end = n - n % kLanes;
  __m256d acc_a = _mm256_setzero_pd();
  __m256d acc_b = _mm256_setzero_pd();
  for (std::size_t i = 0; i < simd_end; i += kLanes) {
    const __m256d vw = _mm256_loadu_pd(&w[i]);
    acc_a = _mm256_fmadd_pd(vw, _mm256_loadu_pd(&a[i]), acc_a);
    acc_b = _mm256_fmadd_pd(vw, _mm256_loadu_pd(&b[i]), acc_b);
  }
  DotPair r{horizontal_sum(acc_a), horizontal_sum(acc_b)};
  for (std::size_t i = simd_end; i < n; ++i) {
    r.first += w[i] * a[i];
    r.second += w[i] * b[i];
  }
  return r;
}

void add_to(std::span<double> acc, std::span<const double> x) {
  assert(acc.size() == x.size());
  const std::size_t n = acc.size();
  const std::size_t simd_end = n - n % kLanes;
  for (std::size_t i = 0; i < simd_end; i += kLanes) {
    _mm256_storeu_pd(&acc[i], _mm256_add_pd(_mm256_loadu_pd(&acc[i]),
                                            _mm256_loadu_pd(&x[i])));
  }
  for (std::size_t i = simd_end; i < n; ++i) acc[i] += x[i];
}

double sum(std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t simd_end = n - n % kLanes;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < simd_end; i += kLanes)
    acc = _mm256_add_pd(acc, _mm256_loadu_pd(&x[i]));
  double result = horizontal_sum(acc);
  for (std::size_t i = simd_end; i < n; ++i) result += x[i];
  return result;
}

void scale(std::span<double> x, double factor) {
  const std::size_t n = x.size();
  const std::size_t simd_end = n - n % kLanes;
  const __m256d f = _mm256_set1_pd(factor);
  for (std::size_t i = 0; i < simd_end; i += kLanes)
    _mm256_storeu_pd(&x[i], _mm256_mul_pd(_mm256_loadu_pd(&x[i]), f));
  for (std::size_t i = simd_end; i < n; ++i) x[i] *= factor;
}

void xor_bytes(std::span<const std::uint8_t> in,
               std::span<const std::uint8_t> pad, std::span<std::uint8_t> out) {
  assert(in.size() == pad.size() && in.size() == out.size());
  constexpr std::size_t kBlock = 32;
  const std::size_t n = in.size();
  const std::size_t simd_end = n - n % kBlock;
  for (std::size_t i = 0; i < simd_end; i += kBlock) {
    const __m256i vi = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(&in[i]));
    const __m256i vp = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(&pad[i]));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(&out[i]), _mm256_xor_si256(vi, vp));
  }
  for (std::size_t i = simd_end; i < n; ++i)
    out[i] = static_cast<std::uint8_t>(in[i] ^ pad[i]);
}

}  // namespace adx::kernels::avx2
