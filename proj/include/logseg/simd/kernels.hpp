#pragma once

// Data-parallel inner loops shared by the neighbor search and the local
// shape analysis. Every kernel has a portable scalar reference and, on x86-64,
// an AVX2+FMA variant picked once at startup from CPUID. The two variants only
// differ in summation order.
//
// This header must stay free of inline code that depends on compiler flags:
// the AVX2 translation unit includes it.

#include <cstddef>

namespace logseg::simd {

enum class Backend { Scalar, Avx2 };

/// Sum of weights and weighted coordinate sums.
struct WeightedSums {
  double w = 0.0;
  double wx = 0.0;
  double wy = 0.0;
  double wz = 0.0;
};

/// Upper triangle of sum_j w_j (p_j - c)(p_j - c)^T.
struct WeightedMoments {
  double xx = 0.0;
  double xy = 0.0;
  double xz = 0.0;
  double yy = 0.0;
  double yz = 0.0;
  double zz = 0.0;
};

struct KernelTable {
  Backend backend;
  /// out[j] = |p_j - q|^2 for structure-of-arrays coordinates.
  void (*squared_distances)(const double* x, const double* y, const double* z, std::size_t n,
                            double qx, double qy, double qz, double* out);
  WeightedSums (*weighted_sums)(const double* w, const double* x, const double* y, const double* z,
                                std::size_t n);
  WeightedMoments (*weighted_moments)(const double* w, const double* x, const double* y,
                                      const double* z, std::size_t n, double cx, double cy,
                                      double cz);
  /// Projects (p_j - c) onto three axes given as row-major 3x3 (axis a = axes[3a..3a+2]).
  void (*project3)(const double* x, const double* y, const double* z, std::size_t n, double cx,
                   double cy, double cz, const double* axes, double* q0, double* q1, double* q2);
};

const KernelTable& scalar_kernels() noexcept;

/// nullptr when the binary or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels() noexcept;

bool cpu_has_avx2() noexcept;

/// The table used by the library. Defaults to the widest supported backend;
/// LOGSEG_SIMD=scalar in the environment forces the reference kernels.
const KernelTable& active() noexcept;

/// Overrides the dispatch choice process-wide. Requesting Avx2 on a machine
/// without it falls back to Scalar. Returns the backend now in effect.
Backend set_backend(Backend requested) noexcept;

const char* to_string(Backend backend) noexcept;

}  // namespace logseg::simd
