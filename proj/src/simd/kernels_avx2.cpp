// Compiled with -mavx2 -mfma. Only reachable through avx2_kernels() after a
// CPUID check, so nothing here may be called unconditionally.
#include "logseg/simd/kernels.hpp"

#if defined(LOGSEG_HAVE_AVX2)

#include <immintrin.h>

namespace logseg::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void squared_distances(const double* x, const double* y, const double* z, std::size_t n, double qx,
                       double qy, double qz, double* out) {
  const __m256d vqx = _mm256_set1_pd(qx);
  const __m256d vqy = _mm256_set1_pd(qy);
  const __m256d vqz = _mm256_set1_pd(qz);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(x + j), vqx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(y + j), vqy);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(z + j), vqz);
    // No FMA: keeps distances bit-identical to the scalar kernel so neighbor
    // ties resolve the same way on every backend.
    __m256d d = _mm256_mul_pd(dx, dx);
    d = _mm256_add_pd(d, _mm256_mul_pd(dy, dy));
    d = _mm256_add_pd(d, _mm256_mul_pd(dz, dz));
    _mm256_storeu_pd(out + j, d);
  }
  for (; j < n; ++j) {
    const double dx = x[j] - qx;
    const double dy = y[j] - qy;
    const double dz = z[j] - qz;
    out[j] = dx * dx + dy * dy + dz * dz;
  }
}

WeightedSums weighted_sums(const double* w, const double* x, const double* y, const double* z,
                           std::size_t n) {
  __m256d sw = _mm256_setzero_pd();
  __m256d sx = _mm256_setzero_pd();
  __m256d sy = _mm256_setzero_pd();
  __m256d sz = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d vw = _mm256_loadu_pd(w + j);
    sw = _mm256_add_pd(sw, vw);
    sx = _mm256_fmadd_pd(vw, _mm256_loadu_pd(x + j), sx);
    sy = _mm256_fmadd_pd(vw, _mm256_loadu_pd(y + j), sy);
    sz = _mm256_fmadd_pd(vw, _mm256_loadu_pd(z + j), sz);
  }
  WeightedSums s{hsum(sw), hsum(sx), hsum(sy), hsum(sz)};
  for (; j < n; ++j) {
    s.w += w[j];
    s.wx += w[j] * x[j];
    s.wy += w[j] * y[j];
    s.wz += w[j] * z[j];
  }
  return s;
}

WeightedMoments weighted_moments(const double* w, const double* x, const double* y, const double* z,
                                 std::size_t n, double cx, double cy, double cz) {
  const __m256d vcx = _mm256_set1_pd(cx);
  const __m256d vcy = _mm256_set1_pd(cy);
  const __m256d vcz = _mm256_set1_pd(cz);
  __m256d xx = _mm256_setzero_pd(), xy = _mm256_setzero_pd(), xz = _mm256_setzero_pd();
  __m256d yy = _mm256_setzero_pd(), yz = _mm256_setzero_pd(), zz = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d vw = _mm256_loadu_pd(w + j);
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(x + j), vcx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(y + j), vcy);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(z + j), vcz);
    const __m256d wdx = _mm256_mul_pd(vw, dx);
    const __m256d wdy = _mm256_mul_pd(vw, dy);
    const __m256d wdz = _mm256_mul_pd(vw, dz);
    xx = _mm256_fmadd_pd(wdx, dx, xx);
    xy = _mm256_fmadd_pd(wdx, dy, xy);
    xz = _mm256_fmadd_pd(wdx, dz, xz);
    yy = _mm256_fmadd_pd(wdy, dy, yy);
    yz = _mm256_fmadd_pd(wdy, dz, yz);
    zz = _mm256_fmadd_pd(wdz, dz, zz);
  }
  WeightedMoments m{hsum(xx), hsum(xy), hsum(xz), hsum(yy), hsum(yz), hsum(zz)};
  for (; j < n; ++j) {
    const double dx = x[j] - cx;
    const double dy = y[j] - cy;
    const double dz = z[j] - cz;
    const double wdx = w[j] * dx;
    const double wdy = w[j] * dy;
    m.xx += wdx * dx;
    m.xy += wdx * dy;
    m.xz += wdx * dz;
    m.yy += wdy * dy;
    m.yz += wdy * dz;
    m.zz += w[j] * dz * dz;
  }
  return m;
}

void project3(const double* x, const double* y, const double* z, std::size_t n, double cx, double cy,
              double cz, const double* axes, double* q0, double* q1, double* q2) {
  const __m256d vcx = _mm256_set1_pd(cx);
  const __m256d vcy = _mm256_set1_pd(cy);
  const __m256d vcz = _mm256_set1_pd(cz);
  __m256d a[9];
  for (int i = 0; i < 9; ++i) a[i] = _mm256_set1_pd(axes[i]);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(x + j), vcx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(y + j), vcy);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(z + j), vcz);
    _mm256_storeu_pd(q0 + j,
                     _mm256_fmadd_pd(a[2], dz, _mm256_fmadd_pd(a[1], dy, _mm256_mul_pd(a[0], dx))));
    _mm256_storeu_pd(q1 + j,
                     _mm256_fmadd_pd(a[5], dz, _mm256_fmadd_pd(a[4], dy, _mm256_mul_pd(a[3], dx))));
    _mm256_storeu_pd(q2 + j,
                     _mm256_fmadd_pd(a[8], dz, _mm256_fmadd_pd(a[7], dy, _mm256_mul_pd(a[6], dx))));
  }
  for (; j < n; ++j) {
    const double dx = x[j] - cx;
    const double dy = y[j] - cy;
    const double dz = z[j] - cz;
    q0[j] = axes[0] * dx + axes[1] * dy + axes[2] * dz;
    q1[j] = axes[3] * dx + axes[4] * dy + axes[5] * dz;
    q2[j] = axes[6] * dx + axes[7] * dy + axes[8] * dz;
  }
}

constexpr KernelTable kAvx2{Backend::Avx2, &squared_distances, &weighted_sums, &weighted_moments,
                            &project3};

}  // namespace

const KernelTable* avx2_table_unchecked() noexcept { return &kAvx2; }

}  // namespace logseg::simd

#else

namespace logseg::simd {
const KernelTable* avx2_table_unchecked() noexcept { return nullptr; }
}  // namespace logseg::simd

#endif
