#pragma once

// Data-parallel inner loops with a scalar reference and vectorized variants.
//
// Every kernel has a portable scalar implementation. Vector variants are
// compiled in separate translation units with their own target flags and are
// selected once per process from CPU feature detection. PMODE_SIMD=scalar
// forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace pmode::simd {

enum class Isa { scalar, avx2 };

struct KernelTable {
  // log(sum_s exp(-(x - centers[s])^2 * inv_two_var)); count >= 1.
  double (*log_sum_gauss)(const double* centers, std::size_t count, double x, double inv_two_var);
  // sum_i (a[i] - b[i])^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
};

namespace scalar {
double log_sum_gauss(const double* centers, std::size_t count, double x, double inv_two_var);
double squared_distance(const double* a, const double* b, std::size_t n);
} // namespace scalar

#if defined(PMODE_HAVE_AVX2)
namespace avx2 {
double log_sum_gauss(const double* centers, std::size_t count, double x, double inv_two_var);
double squared_distance(const double* a, const double* b, std::size_t n);
// exp of four lanes; exposed for equivalence testing.
void exp4(const double* in, double* out);
} // namespace avx2
#endif

// Highest ISA this binary and CPU both support.
Isa detected_isa();
// ISA used by kernels(); detected_isa() unless overridden by PMODE_SIMD.
Isa active_isa();
bool isa_available(Isa isa);
std::string_view isa_name(Isa isa);

const KernelTable& kernels();
const KernelTable& kernels(Isa isa);

inline double log_sum_gauss(std::span<const double> centers, double x, double inv_two_var) {
  return kernels().log_sum_gauss(centers.data(), centers.size(), x, inv_two_var);
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return kernels().squared_distance(a.data(), b.data(), a.size());
}

} // namespace pmode::simd
