#pragma once

// Dense arithmetic kernels with a scalar reference path and SIMD variants.
//
// Every public entry point dispatches on the backend chosen at startup: the
// widest of AVX-512, AVX2+FMA and scalar that the CPU reports. The
// RESGENE_SIMD environment variable ("scalar", "avx2" or "avx512") overrides
// the detection; tests call set_backend() directly to compare variants.

#include <cstddef>
#include <string_view>

namespace resgene::kernels {

enum class Backend { kScalar, kAvx2, kAvx512 };

enum class Trans { kNo, kYes };

std::string_view backend_name(Backend b);

// True when the running CPU can execute the given backend.
bool backend_supported(Backend b);

Backend active_backend();
void set_backend(Backend b);

// C[m x n] = alpha * op(A)[m x k] * op(B)[k x n] + beta * C, all row-major.
// lda/ldb/ldc are the row strides of the stored (untransposed) matrices.
// beta == 0 overwrites C without reading it.
template <typename T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          T alpha, const T* a, std::size_t lda, const T* b, std::size_t ldb,
          T beta, T* c, std::size_t ldc);

// y += alpha * x
template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y);

template <typename T>
T dot(std::size_t n, const T* x, const T* y);

namespace detail {

template <typename T>
void gemm_scalar(Trans ta, Trans tb, std::size_t m, std::size_t n,
                 std::size_t k, T alpha, const T* a, std::size_t lda,
                 const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc);
template <typename T>
void axpy_scalar(std::size_t n, T alpha, const T* x, T* y);
template <typename T>
T dot_scalar(std::size_t n, const T* x, const T* y);

#if defined(__x86_64__) || defined(_M_X64)
#define RESGENE_HAVE_AVX2_KERNELS 1
template <typename T>
void gemm_avx2(Trans ta, Trans tb, std::size_t m, std::size_t n,
               std::size_t k, T alpha, const T* a, std::size_t lda,
               const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc);
template <typename T>
void axpy_avx2(std::size_t n, T alpha, const T* x, T* y);
template <typename T>
T dot_avx2(std::size_t n, const T* x, const T* y);

template <typename T>
void gemm_avx512(Trans ta, Trans tb, std::size_t m, std::size_t n,
                 std::size_t k, T alpha, const T* a, std::size_t lda,
                 const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc);
template <typename T>
void axpy_avx512(std::size_t n, T alpha, const T* x, T* y);
template <typename T>
T dot_avx512(std::size_t n, const T* x, const T* y);
#endif

}  // namespace detail

}  // namespace resgene::kernels
