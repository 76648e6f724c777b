#include <atomic>
#include <cstdlib>
#include <string>

#include "resgene/kernels.hpp"

namespace resgene::kernels {
namespace {

Backend detect() {
  Backend best = Backend::kScalar;
  if (backend_supported(Backend::kAvx2)) best = Backend::kAvx2;
  if (backend_supported(Backend::kAvx512)) best = Backend::kAvx512;
  if (const char* env = std::getenv("RESGENE_SIMD")) {
    const std::string want(env);
    for (Backend b : {Backend::kScalar, Backend::kAvx2, Backend::kAvx512}) {
      if (want == backend_name(b) && backend_supported(b)) return b;
    }
  }
  return best;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
    case Backend::kAvx512:
      return "avx512";
  }
  return "unknown";
}

bool backend_supported(Backend b) {
  if (b == Backend::kScalar) return true;
#if defined(RESGENE_HAVE_AVX2_KERNELS)
  const bool avx2 =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  if (b == Backend::kAvx2) return avx2;
  return avx2 && __builtin_cpu_supports("avx512f");
#else
  return false;
#endif
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_supported(b)) b = Backend::kScalar;
  current().store(b, std::memory_order_relaxed);
}

template <typename T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          T alpha, const T* a, std::size_t lda, const T* b, std::size_t ldb,
          T beta, T* c, std::size_t ldc) {
#if defined(RESGENE_HAVE_AVX2_KERNELS)
  switch (active_backend()) {
    case Backend::kAvx512:
      detail::gemm_avx512(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
      return;
    case Backend::kAvx2:
      detail::gemm_avx2(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
      return;
    case Backend::kScalar:
      break;
  }
#endif
  detail::gemm_scalar(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
#if defined(RESGENE_HAVE_AVX2_KERNELS)
  switch (active_backend()) {
    case Backend::kAvx512:
      detail::axpy_avx512(n, alpha, x, y);
      return;
    case Backend::kAvx2:
      detail::axpy_avx2(n, alpha, x, y);
      return;
    case Backend::kScalar:
      break;
  }
#endif
  detail::axpy_scalar(n, alpha, x, y);
}

template <typename T>
T dot(std::size_t n, const T* x, const T* y) {
#if defined(RESGENE_HAVE_AVX2_KERNELS)
  switch (active_backend()) {
    case Backend::kAvx512:
      return detail::dot_avx512(n, x, y);
    case Backend::kAvx2:
      return detail::dot_avx2(n, x, y);
    case Backend::kScalar:
      break;
  }
#endif
  return detail::dot_scalar(n, x, y);
}

#define RESGENE_INSTANTIATE(T)                                             \
  template void gemm<T>(Trans, Trans, std::size_t, std::size_t,            \
                        std::size_t, T, const T*, std::size_t, const T*,   \
                        std::size_t, T, T*, std::size_t);                  \
  template void axpy<T>(std::size_t, T, const T*, T*);                     \
  template T dot<T>(std::size_t, const T*, const T*);

RESGENE_INSTANTIATE(float)
RESGENE_INSTANTIATE(double)
#undef RESGENE_INSTANTIATE

}  // namespace resgene::kernels
