#include "resgene/kernels.hpp"

namespace resgene::kernels::detail {

template <typename T>
void gemm_scalar(Trans ta, Trans tb, std::size_t m, std::size_t n,
                 std::size_t k, T alpha, const T* a, std::size_t lda,
                 const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc) {
  const bool at = ta == Trans::kYes;
  const bool bt = tb == Trans::kYes;
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    if (beta == T(0)) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = T(0);
    } else if (beta != T(1)) {
      for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
    }
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = alpha * (at ? a[p * lda + i] : a[i * lda + p]);
      if (bt) {
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * b[j * ldb + p];
      } else {
        const T* brow = b + p * ldb;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  }
}

template <typename T>
void axpy_scalar(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
T dot_scalar(std::size_t n, const T* x, const T* y) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

#define RESGENE_INSTANTIATE(T)                                              \
  template void gemm_scalar<T>(Trans, Trans, std::size_t, std::size_t,      \
                               std::size_t, T, const T*, std::size_t,       \
                               const T*, std::size_t, T, T*, std::size_t);  \
  template void axpy_scalar<T>(std::size_t, T, const T*, T*);               \
  template T dot_scalar<T>(std::size_t, const T*, const T*);

RESGENE_INSTANTIATE(float)
RESGENE_INSTANTIATE(double)
#undef RESGENE_INSTANTIATE

}  // namespace resgene::kernels::detail
