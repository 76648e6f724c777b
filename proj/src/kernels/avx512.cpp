#include "resgene/kernels.hpp"

#if defined(RESGENE_HAVE_AVX2_KERNELS)

#include <immintrin.h>

#include <algorithm>
#include <vector>

#define RESGENE_AVX512 __attribute__((target("avx512f,avx2,fma")))
#define RESGENE_AVX512_INLINE \
  inline __attribute__((always_inline, target("avx512f,avx2,fma")))

namespace resgene::kernels::detail {
namespace {

template <typename T>
struct Simd;

template <>
struct Simd<float> {
  using Vec = __m512;
  static constexpr std::size_t kWidth = 16;
  RESGENE_AVX512_INLINE static Vec zero() { return _mm512_setzero_ps(); }
  RESGENE_AVX512_INLINE static Vec load(const float* p) { return _mm512_loadu_ps(p); }
  RESGENE_AVX512_INLINE static void store(float* p, Vec v) { _mm512_storeu_ps(p, v); }
  RESGENE_AVX512_INLINE static Vec broadcast(float x) { return _mm512_set1_ps(x); }
  RESGENE_AVX512_INLINE static Vec fmadd(Vec a, Vec b, Vec c) {
    return _mm512_fmadd_ps(a, b, c);
  }
  RESGENE_AVX512_INLINE static Vec add(Vec a, Vec b) { return _mm512_add_ps(a, b); }
  RESGENE_AVX512_INLINE static float hsum(Vec v) { return _mm512_reduce_add_ps(v); }
};

template <>
struct Simd<double> {
  using Vec = __m512d;
  static constexpr std::size_t kWidth = 8;
  RESGENE_AVX512_INLINE static Vec zero() { return _mm512_setzero_pd(); }
  RESGENE_AVX512_INLINE static Vec load(const double* p) { return _mm512_loadu_pd(p); }
  RESGENE_AVX512_INLINE static void store(double* p, Vec v) { _mm512_storeu_pd(p, v); }
  RESGENE_AVX512_INLINE static Vec broadcast(double x) { return _mm512_set1_pd(x); }
  RESGENE_AVX512_INLINE static Vec fmadd(Vec a, Vec b, Vec c) {
    return _mm512_fmadd_pd(a, b, c);
  }
  RESGENE_AVX512_INLINE static Vec add(Vec a, Vec b) { return _mm512_add_pd(a, b); }
  RESGENE_AVX512_INLINE static double hsum(Vec v) { return _mm512_reduce_add_pd(v); }
};

// Register tile: kMr rows by two vectors; 24 of the 32 zmm registers hold
// accumulators.
constexpr std::size_t kMr = 12;
constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 192;
constexpr std::size_t kNc = 2048;

template <typename T>
constexpr std::size_t kNr = 2 * Simd<T>::kWidth;

template <typename T>
void pack_a(bool trans, const T* a, std::size_t lda, std::size_t ic,
            std::size_t pc, std::size_t mc, std::size_t kc, T alpha, T* out) {
  for (std::size_t i0 = 0; i0 < mc; i0 += kMr) {
    const std::size_t rows = std::min(kMr, mc - i0);
    if (trans) {
      for (std::size_t p = 0; p < kc; ++p) {
        const T* src = a + (pc + p) * lda + ic + i0;
        for (std::size_t ii = 0; ii < kMr; ++ii) {
          *out++ = ii < rows ? alpha * src[ii] : T(0);
        }
      }
      continue;
    }
    for (std::size_t p = 0; p < kc; ++p) {
      for (std::size_t ii = 0; ii < kMr; ++ii) {
        *out++ = ii < rows ? alpha * a[(ic + i0 + ii) * lda + pc + p] : T(0);
      }
    }
  }
}

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
RESGENE_AVX512_INLINE void micro_kernel(std::size_t kc, const T* ap, const T* bp,
                                        T* c, std::size_t ldc, std::size_t rows,
                                        std::size_t cols) {
  using S = Simd<T>;
  using Vec = typename S::Vec;
  constexpr std::size_t w = S::kWidth;
  constexpr std::size_t nr = kNr<T>;

  Vec acc[kMr][2];
#pragma GCC unroll 12
  for (std::size_t i = 0; i < kMr; ++i) {
    acc[i][0] = S::zero();
    acc[i][1] = S::zero();
  }
  for (std::size_t p = 0; p < kc; ++p) {
    const Vec b0 = S::load(bp);
    const Vec b1 = S::load(bp + w);
#pragma GCC unroll 12
    for (std::size_t i = 0; i < kMr; ++i) {
      const Vec a = S::broadcast(ap[i]);
      acc[i][0] = S::fmadd(a, b0, acc[i][0]);
      acc[i][1] = S::fmadd(a, b1, acc[i][1]);
    }
    ap += kMr;
    bp += nr;
  }

  if (cols == nr) {
#pragma GCC unroll 12
    for (std::size_t i = 0; i < kMr; ++i) {
      if (i < rows) {
        T* crow = c + i * ldc;
        S::store(crow, S::add(S::load(crow), acc[i][0]));
        S::store(crow + w, S::add(S::load(crow + w), acc[i][1]));
      }
    }
    return;
  }
  alignas(64) T tile[kMr * nr];
#pragma GCC unroll 12
  for (std::size_t i = 0; i < kMr; ++i) {
    S::store(tile + i * nr, acc[i][0]);
    S::store(tile + i * nr + w, acc[i][1]);
  }
  for (std::size_t i = 0; i < rows; ++i) {
    T* crow = c + i * ldc;
    for (std::size_t j = 0; j < cols; ++j) crow[j] += tile[i * nr + j];
  }
}

template <typename T>
RESGENE_AVX512 void gemm_impl(Trans ta, Trans tb, std::size_t m, std::size_t n,
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
RESGENE_AVX512 void axpy_impl(std::size_t n, T alpha, const T* x, T* y) {
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
RESGENE_AVX512 T dot_impl(std::size_t n, const T* x, const T* y) {
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

template <typename T>
void gemm_avx512(Trans ta, Trans tb, std::size_t m, std::size_t n,
                 std::size_t k, T alpha, const T* a, std::size_t lda,
                 const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc) {
  gemm_impl(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

template <typename T>
void axpy_avx512(std::size_t n, T alpha, const T* x, T* y) {
  axpy_impl(n, alpha, x, y);
}

template <typename T>
T dot_avx512(std::size_t n, const T* x, const T* y) {
  return dot_impl(n, x, y);
}

#define RESGENE_INSTANTIATE(T)                                              \
  template void gemm_avx512<T>(Trans, Trans, std::size_t, std::size_t,      \
                               std::size_t, T, const T*, std::size_t,       \
                               const T*, std::size_t, T, T*, std::size_t);  \
  template void axpy_avx512<T>(std::size_t, T, const T*, T*);               \
  template T dot_avx512<T>(std::size_t, const T*, const T*);

RESGENE_INSTANTIATE(float)
RESGENE_INSTANTIATE(double)
#undef RESGENE_INSTANTIATE

}  // namespace resgene::kernels::detail

#endif  // RESGENE_HAVE_AVX2_KERNELS
