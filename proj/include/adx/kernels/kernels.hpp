#pragma once

// Data-parallel inner loops shared by the diagnosis engine and the SMS
// cipher. Each kernel has a scalar reference implementation and an AVX2
// variant; the free functions dispatch to the best variant the CPU supports.
// Setting ADX_ISA=scalar in the environment pins the scalar path.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace adx::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

// True when the CPU (and build) can run the given variant.
bool isa_supported(Isa isa);

// Variant currently used by the dispatching entry points.
Isa active_isa();

// Overrides the dispatch choice; an unsupported ISA falls back to scalar.
// Intended for tests and benchmarks; not thread-safe against concurrent calls.
void set_active_isa(Isa isa);

struct DotPair {
  double first = 0.0;
  double second = 0.0;
};

// Sum of a[i] * b[i]. Sizes must match.
double dot(std::span<const double> a, std::span<const double> b);

// {dot(w, a), dot(w, b)} in a single pass over w.
DotPair dot2(std::span<const double> w, std::span<const double> a,
             std::span<const double> b);

// acc[i] += x[i]
void add_to(std::span<double> acc, std::span<const double> x);

double sum(std::span<const double> x);

// x[i] *= factor
void scale(std::span<double> x, double factor);

// out[i] = in[i] ^ pad[i]; in, pad and out have the same length. out may alias in.
void xor_bytes(std::span<const std::uint8_t> in,
               std::span<const std::uint8_t> pad, std::span<std::uint8_t> out);

namespace scalar {
double dot(std::span<const double> a, std::span<const double> b);
DotPair dot2(std::span<const double> w, std::span<const double> a,
             std::span<const double> b);
void add_to(std::span<double> acc, std::span<const double> x);
double sum(std::span<const double> x);
void scale(std::span<double> x, double factor);
void xor_bytes(std::span<const std::uint8_t> in,
               std::span<const std::uint8_t> pad, std::span<std::uint8_t> out);
}  // namespace scalar

namespace avx2 {
double dot(std::span<const double> a, std::span<const double> b);
DotPair dot2(std::span<const double> w, std::span<const double> a,
             std::span<const double> b);
void add_to(std::span<double> acc, std::span<const double> x);
double sum(std::span<const double> x);
void scale(std::span<double> x, double factor);
void xor_bytes(std::span<const std::uint8_t> in,
               std::span<const std::uint8_t> pad, std::span<std::uint8_t> out);
}  // namespace avx2

}  // namespace adx::kernels
