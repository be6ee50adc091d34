#include <cstdlib>
#include <string>

#include "pmode/error.hpp"
#include "pmode/simd.hpp"

namespace pmode::simd {
namespace {

constexpr KernelTable kScalar{&scalar::log_sum_gauss, &scalar::squared_distance};
#if defined(PMODE_HAVE_AVX2)
constexpr KernelTable kAvx2{&avx2::log_sum_gauss, &avx2::squared_distance};
#endif

Isa pick_active() {
  if (const char* env = std::getenv("PMODE_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2" && isa_available(Isa::avx2)) return Isa::avx2;
  }
  return detected_isa();
}

} // namespace

bool isa_available(Isa isa) {
  switch (isa) {
  case Isa::scalar:
    return true;
  case Isa::avx2:
#if defined(PMODE_HAVE_AVX2)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
  }
  return false;
}

Isa detected_isa() {
  static const Isa isa = isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar;
  return isa;
}

Isa active_isa() {
  static const Isa isa = pick_active();
  return isa;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
  case Isa::scalar:
    return "scalar";
  case Isa::avx2:
    return "avx2";
  }
  return "unknown";
}

const KernelTable& kernels(Isa isa) {
  switch (isa) {
  case Isa::scalar:
    return kScalar;
  case Isa::avx2:
#if defined(PMODE_HAVE_AVX2)
    if (isa_available(Isa::avx2)) return kAvx2;
#endif
    break;
  }
  throw InvalidConfig("SIMD kernel set '" + std::string(isa_name(isa)) + "' is not available");
}

const KernelTable& kernels() {
  static const KernelTable& table = kernels(active_isa());
  return table;
}

} // namespace pmode::simd
