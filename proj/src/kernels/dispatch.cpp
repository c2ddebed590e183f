#include "adx/kernels/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace adx::kernels {

namespace {

struct Table {
  double (*dot)(std::span<const double>, std::span<const double>);
  DotPair (*dot2)(std::span<const double>, std::span<const double>,
                  std::span<const double>);
  void (*add_to)(std::span<double>, std::span<const double>);
  double (*sum)(std::span<const double>);
  void (*scale)(std::span<double>, double);
  void (*xor_bytes)(std::span<const std::uint8_t>, std::span<const std::uint8_t>,
                    std::span<std::uint8_t>);
};

constexpr Table kScalar{scalar::dot, scalar::dot2, scalar::add_to,
                        scalar::sum, scalar::scale, scalar::xor_bytes};
constexpr Table kAvx2{avx2::dot, avx2::dot2, avx2::add_to,
                      avx2::sum, avx2::scale, avx2::xor_bytes};

Isa detect() {
  if (const char* env = std::getenv("ADX_ISA"); env && std::strcmp(env, "scalar") == 0)
    return Isa::scalar;
  return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

struct State {
  Isa isa;
  const Table* table;
};

State& state() {
  static State s = [] {
    const Isa isa = detect();
    return State{isa, isa == Isa::avx2 ? &kAvx2 : &kScalar};
  }();
  return s;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(__i386__)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() { return state().isa; }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) isa = Isa::scalar;
  state() = State{isa, isa == Isa::avx2 ? &kAvx2 : &kScalar};
}

double dot(std::span<const double> a, std::span<const double> b) {
  return state().table->dot(a, b);
}

DotPair dot2(std::span<const double> w, std::span<const double> a,
             std::span<const double> b) {
  return state().table->dot2(w, a, b);
}

void add_to(std::span<double> acc, std::span<const double> x) {
  state().table->add_to(acc, x);
}

double sum(std::span<const double> x) { return state().table->sum(x); }

void scale(std::span<double> x, double factor) { state().table->scale(x, factor); }

void xor_bytes(std::span<const std::uint8_t> in,
               std::span<const std::uint8_t> pad, std::span<std::uint8_t> out) {
  state().table->xor_bytes(in, pad, out);
}

}  // namespace adx::kernels
