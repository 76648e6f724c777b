#include "resgene/kernels.hpp"

#if defined(RESGENE_HAVE_AVX2_KERNELS)

#include <immintrin.h>

#include <algorithm>
#include <vector>

// Functions carry target attributes instead of compiling the whole file with
// -mavx2, so inline code shared with other translation units never picks up
// AVX2 encodings.
#define RESGENE_AVX2 __attribute__((target("avx2,fma")))
#define RESGENE_AVX2_INLINE \
  inline __attribute__((always_inline, target("avx2,fma")))

namespace resgene::kernels::detail {
namespace {

template <typename T>
struct Simd;

template <>
struct Simd<float> {
  using Vec = __m256;
  static constexpr std::size_t kWidth = 8;
  RESGENE_AVX2_INLINE static Vec zero() { return _mm256_setzero_ps(); }
  RESGENE_AVX2_INLINE static Vec load(const float* p) { return _mm256_loadu_ps(p); }
  RESGENE_AVX2_INLINE static void store(float* p, Vec v) { _mm256_storeu_ps(p, v); }
  RESGENE_AVX2_INLINE static Vec broadcast(float x) { return _mm256_set1_ps(x); }
  RESGENE_AVX2_INLINE static Vec fmadd(Vec a, Vec b, Vec c) {
    return _mm256_fmadd_ps(a, b, c);
  }
  RESGENE_AVX2_INLINE static Vec add(Vec a, Vec b) { return _mm256_add_ps(a, b); }
  RESGENE_AVX2_INLINE static float hsum(Vec v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
  }
};

template <>
struct Simd<double> {
  using Vec = __m256d;
  static constexpr std::size_t kWidth = 4;
  RESGENE_AVX2_INLINE static Vec zero() { return _mm256_setzero_pd(); }
  RESGENE_AVX2_INLINE static Vec load(const double* p) { return _mm256_loadu_pd(p); }
  RESGENE_AVX2_INLINE static void store(double* p, Vec v) { _mm256_storeu_pd(p, v); }
  RESGENE_AVX2_INLINE static Vec broadcast(double x) { return _mm256_set1_pd(x); }
  RESGENE_AVX2_INLINE static Vec fmadd(Vec a, Vec b, Vec c) {
    return _mm256_fmadd_pd(a, b, c);
  }
  RESGENE_AVX2_INLINE static Vec add(Vec a, Vec b) { return _mm256_add_pd(a, b); }
  RESGENE_AVX2_INLINE static double hsum(Vec v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d high64 = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
  }
};

// Register tile: kMr rows by two vectors of columns.
constexpr std::size_t kMr = 6;
constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 96;
constexpr std::size_t kNc = 2048;

template <typename T>
constexpr std::size_t kNr = 2 * Simd<T>::kWidth;

// Packs op(A)[ic:ic+mc, pc:pc+kc] scaled by alpha into kMr-row slivers,
// zero-padding the final sliver.
template <typename T>
void pack_a(bool trans, const T* a, std::size_t lda, std::size_t ic,
            std::size_t pc, std::size_t mc, std::size_t kc, T alpha, T* out) {
  for (std::size_t i0 = 0; i0 < mc; i0 += kMr) {
    const std::size_t rows = std::min(kMr, mc - i0);
    for (std::size_t p = 0; p < kc; ++p) {
      for (std::size_t ii = 0; ii < kMr; ++ii) {
        T v = T(0);
        if (ii < rows) {
          const std::size_t r = ic + i0 + ii;
          const std::size_t col = pc + p;
          v = alpha * (trans ? a[col * lda + r] : a[r * lda + col]);
        }
        *out++ = v;
      }
    }
  }
}

// Packs op(B)[pc:pc+kc, jc:jc+nc] into kNr-column slivers.
template <typename T>
void pack_b(bool trans, const T* b, std::size_t ldb, std::size_t pc,
            std::size_t jc, std::size_t kc, std::size_t nc, T* out) {
  constexpr std::size_t nr = kNr<T>;
  for (std::size_t j0 = 0; j0 < nc; j0 += nr) {
    const std::size_t cols = std::min(nr, nc - j0);
    for (std::size_t p = 0; p < kc; ++p) {
      const std::size_t row = pc + p;
      if (!trans && cols == nr) {
        const T* src = b + row * ldb + jc + j0;
        std::copy(src, src + nr, out);
        out += nr;
        continue;
      }
      for (std::size_t jj = 0; jj < nr; ++jj) {
        T v = T(0);
        if (jj < cols) {
          const std::size_t col = jc + j0 + jj;
          v = trans ? b[col * ldb + row] : b[row * ldb + col];
        }
        *out++ = v;
      }
    }
  }
}

template <typename T>
RESGENE_AVX2_INLINE void micro_kernel(std::size_t kc, const T* ap, const T* bp, T* c,
                               std::size_t ldc, std::size_t rows,
                               std::size_t cols) {
  using S = Simd<T>;
  using Vec = typename S::Vec;
  constexpr std::size_t w = S::kWidth;
  constexpr std::size_t nr = kNr<T>;

  Vec c00 = S::zero(), c01 = S::zero(), c10 = S::zero(), c11 = S::zero();
  Vec c20 = S::zero(), c21 = S::zero(), c30 = S::zero(), c31 = S::zero();
  Vec c40 = S::zero(), c41 = S::zero(), c50 = S::zero(), c51 = S::zero();
  for (std::size_t p = 0; p < kc; ++p) {
    const Vec b0 = S::load(bp);
    const Vec b1 = S::load(bp + w);
    Vec a = S::broadcast(ap[0]);
    c00 = S::fmadd(a, b0, c00);
    c01 = S::fmadd(a, b1, c01);
    a = S::broadcast(ap[1]);
    c10 = S::fmadd(a, b0, c10);
    c11 = S::fmadd(a, b1, c11);
    a = S::broadcast(ap[2]);
    c20 = S::fmadd(a, b0, c20);
    c21 = S::fmadd(a, b1, c21);
    a = S::broadcast(ap[3]);
    c30 = S::fmadd(a, b0, c30);
    c31 = S::fmadd(a, b1, c31);
    a = S::broadcast(ap[4]);
    c40 = S::fmadd(a, b0, c40);
    c41 = S::fmadd(a, b1, c41);
    a = S::broadcast(ap[5]);
    c50 = S::fmadd(a, b0, c50);
    c51 = S::fmadd(a, b1, c51);
    ap += kMr;
    bp += nr;
  }

  alignas(32) T tile[kMr * nr];
  S::store(tile + 0 * nr, c00);
  S::store(tile + 0 * nr + w, c01);
  S::store(tile + 1 * nr, c10);
  S::store(tile + 1 * nr + w, c11);
  S::store(tile + 2 * nr, c20);
  S::store(tile + 2 * nr + w, c21);
  S::store(tile + 3 * nr, c30);
  S::store(tile + 3 * nr + w, c31);
  S::store(tile + 4 * nr, c40);
  S::store(tile + 4 * nr + w, c41);
  S::store(tile + 5 * nr, c50);
  S::store(tile + 5 * nr + w, c51);

  if (cols == nr) {
    for (std::size_t i = 0; i < rows; ++i) {
      T* crow = c + i * ldc;
      S::store(crow, S::add(S::load(crow), S::load(tile + i * nr)));
      S::store(crow + w, S::add(S::load(crow + w), S::load(tile + i * nr + w)));
    }
  } else {
    for (std::size_t i = 0; i < rows; ++i) {
      T* crow = c + i * ldc;
      for (std::size_t j = 0; j < cols; ++j) crow[j] += tile[i * nr + j];
    }
  }
}

template <typename T>
RESGENE_AVX2 void gemm_impl(Trans ta, Trans tb, std::size_t m, std::size_t n,
                            std::size_t k, T alpha, const T* a,
                            std::size_t lda, const T* b, std::size_t ldb,
                            T beta, T* c, std::size_t ldc) {
  constexpr std::size_t nr = kNr<T>;
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    if (beta == T(0)) {
      std::fill(crow, crow + n, T(0));
    } else if (beta != T(1)) {
      for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
    }
  }
  if (m == 0 || n == 0 || k == 0 || alpha == T(0)) return;

  const bool at = ta == Trans::kYes;
  const bool bt = tb == Trans::kYes;
  thread_local std::vector<T> apack;
  thread_local std::vector<T> bpack;
  apack.resize(((kMc + kMr - 1) / kMr) * kMr * kKc);
  bpack.resize(((kNc + nr - 1) / nr) * nr * kKc);

  for (std::size_t jc = 0; jc < n; jc += kNc) {
    const std::size_t nc = std::min(kNc, n - jc);
    for (std::size_t pc = 0; pc < k; pc += kKc) {
      const std::size_t kc = std::min(kKc, k - pc);
      pack_b(bt, b, ldb, pc, jc, kc, nc, bpack.data());
      for (std::size_t ic = 0; ic < m; ic += kMc) {
        const std::size_t mc = std::min(kMc, m - ic);
        pack_a(at, a, lda, ic, pc, mc, kc, alpha, apack.data());
        for (std::size_t j0 = 0; j0 < nc; j0 += nr) {
          const std::size_t cols = std::min(nr, nc - j0);
          const T* bp = bpack.data() + (j0 / nr) * nr * kc;
          for (std::size_t i0 = 0; i0 < mc; i0 += kMr) {
            const std::size_t rows = std::min(kMr, mc - i0);
            const T* ap = apack.data() + (i0 / kMr) * kMr * kc;
            micro_kernel(kc, ap, bp, c + (ic + i0) * ldc + jc + j0, ldc, rows,
                         cols);
          }
        }
      }
    }
  }
}

template <typename T>
RESGENE_AVX2 void axpy_impl(std::size_t n, T alpha, const T* x, T* y) {
  using S = Simd<T>;
  constexpr std::size_t w = S::kWidth;
  const auto va = S::broadcast(alpha);
  std::size_t i = 0;
  for (; i + w <= n; i += w) {
    S::store(y + i, S::fmadd(va, S::load(x + i), S::load(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
RESGENE_AVX2 T dot_impl(std::size_t n, const T* x, const T* y) {
  using S = Simd<T>;
  constexpr std::size_t w = S::kWidth;
  auto acc0 = S::zero();
  auto acc1 = S::zero();
  std::size_t i = 0;
  for (; i + 2 * w <= n; i += 2 * w) {
    acc0 = S::fmadd(S::load(x + i), S::load(y + i), acc0);
    acc1 = S::fmadd(S::load(x + i + w), S::load(y + i + w), acc1);
  }
  for (; i + w <= n; i += w) {
    acc0 = S::fmadd(S::load(x + i), S::load(y + i), acc0);
  }
  T acc = S::hsum(S::add(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

}  // namespace

// The target attribute must sit on the first declaration, which for these
// templates is the header; the attributed implementations above do the work.
template <typename T>
void gemm_avx2(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
               T alpha, const T* a, std::size_t lda, const T* b,
               std::size_t ldb, T beta, T* c, std::size_t ldc) {
  gemm_impl(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

template <typename T>
void axpy_avx2(std::size_t n, T alpha, const T* x, T* y) {
  axpy_impl(n, alpha, x, y);
}

template <typename T>
T dot_avx2(std::size_t n, const T* x, const T* y) {
  return dot_impl(n, x, y);
}

#define RESGENE_INSTANTIATE(T)                                              \
  template void gemm_avx2<T>(Trans, Trans, std::size_t, std::size_t,        \
                             std::size_t, T, const T*, std::size_t,         \
                             const T*, std::size_t, T, T*, std::size_t);    \
  template void axpy_avx2<T>(std::size_t, T, const T*, T*);                 \
  template T dot_avx2<T>(std::size_t, const T*, const T*);

RESGENE_INSTANTIATE(float)
RESGENE_INSTANTIATE(double)
#undef RESGENE_INSTANTIATE

}  // namespace resgene::kernels::detail

#endif  // RESGENE_HAVE_AVX2_KERNELS
