#include "adx/kernels/kernels.hpp"

#include <cassert>

namespace adx::kernels::scalar {

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

DotPair dot2(std::span<const double> w, std::span<const double> a,
             std::span<const double> b) {
  assert(w.size() == a.size() && w.size() == b.size());
  DotPair r;
  for (std::size_t i = 0; i < w.size(); ++i) {
    r.first += w[i] * a[i];
    r.second += w[i] * b[i];
  }
  return r;
}

void add_to(std::span<double> acc, std::span<const double> x) {
  assert(acc.size() == x.size());
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i];
}

double sum(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc;
}

void scale(std::span<double> x, double factor) {
  for (double& v : x) v *= factor;
}

void xor_bytes(std::span<const std::uint8_t> in,
               std::span<const std::uint8_t> pad, std::span<std::uint8_t> out) {
  assert(in.size() == pad.size() && in.size() == out.size());
  for (std::size_t i = 0; i < in.size(); ++i)
    out[i] = static_cast<std::uint8_t>(in[i] ^ pad[i]);
}

}  // namespace adx::kernels::scalar
