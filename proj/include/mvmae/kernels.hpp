#pragma once

#include <cstddef>

// Dense GEMM kernels. Every kernel exists as a serial reference and an
// OpenMP version that partitions output rows across threads. Both variants
// accumulate each output element over the inner dimension in ascending
// order, so they agree bit-for-bit; tests/kernels_test.cpp pins that.
//
// All matrices are row-major. "accumulate" adds into c instead of
// overwriting it.
namespace mvmae::kernels {

namespace serial {

// c[n x m] (+)= a[n x k] * b[k x m]
void matmul(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
            std::size_t m, bool accumulate);
// c[n x m] (+)= a[n x k] * b[m x k]^T
void matmul_nt(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate);
// c[k x m] (+)= a[n x k]^T * b[n x m]
void matmul_tn(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate);

}  // namespace serial

namespace parallel {

void matmul(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
            std::size_t m, bool accumulate);
void matmul_nt(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate);
void matmul_tn(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate);

}  // namespace parallel

// Work (n*k*m) above which the dispatchers below use the OpenMP variant.
inline constexpr std::size_t kParallelThreshold = std::size_t{1} << 18;

void matmul(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
            std::size_t m, bool accumulate);
void matmul_nt(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate);
void matmul_tn(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate);

int max_threads();

}  // namespace mvmae::kernels
