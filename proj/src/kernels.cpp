#include "mvmae/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mvmae::kernels {

namespace {

inline void matmul_row(const double* a, const double* b, double* c, std::size_t i, std::size_t k,
                       std::size_t m, bool accumulate) {
    double* crow = c + i * m;
    if (!accumulate) std::fill(crow, crow + m, 0.0);
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
        const double av = arow[p];
        const double* brow = b + p * m;
        for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
}

inline void matmul_nt_row(const double* a, const double* b, double* c, std::size_t i,
                          std::size_t k, std::size_t m, bool accumulate) {
    const double* arow = a + i * k;
    double* crow = c + i * m;
    for (std::size_t j = 0; j < m; ++j) {
        const double* brow = b + j * k;
        double s = accumulate ? crow[j] : 0.0;
        for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
        crow[j] = s;
    }
}

// Row i of a^T b: sum over p of a[p][i] * b[p][:], p ascending.
inline void matmul_tn_row(const double* a, const double* b, double* c, std::size_t i,
                          std::size_t n, std::size_t k, std::size_t m, bool accumulate) {
    double* crow = c + i * m;
    if (!accumulate) std::fill(crow, crow + m, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        const double av = a[p * k + i];
        const double* brow = b + p * m;
        for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
}

}  // namespace

namespace serial {

void matmul(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
            std::size_t m, bool accumulate) {
    for (std::size_t i = 0; i < n; ++i) matmul_row(a, b, c, i, k, m, accumulate);
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate) {
    for (std::size_t i = 0; i < n; ++i) matmul_nt_row(a, b, c, i, k, m, accumulate);
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate) {
    for (std::size_t i = 0; i < k; ++i) matmul_tn_row(a, b, c, i, n, k, m, accumulate);
}

}  // namespace serial

namespace parallel {

void matmul(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
            std::size_t m, bool accumulate) {
    const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        matmul_row(a, b, c, static_cast<std::size_t>(i), k, m, accumulate);
    }
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate) {
    const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        matmul_nt_row(a, b, c, static_cast<std::size_t>(i), k, m, accumulate);
    }
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate) {
    const auto rows = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        matmul_tn_row(a, b, c, static_cast<std::size_t>(i), n, k, m, accumulate);
    }
}

}  // namespace parallel

void matmul(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
            std::size_t m, bool accumulate) {
    if (n * k * m >= kParallelThreshold) {
        parallel::matmul(a, b, c, n, k, m, accumulate);
    } else {
        serial::matmul(a, b, c, n, k, m, accumulate);
    }
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate) {
    if (n * k * m >= kParallelThreshold) {
        parallel::matmul_nt(a, b, c, n, k, m, accumulate);
    } else {
        serial::matmul_nt(a, b, c, n, k, m, accumulate);
    }
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate) {
    if (n * k * m >= kParallelThreshold) {
        parallel::matmul_tn(a, b, c, n, k, m, accumulate);
    } else {
        serial::matmul_tn(a, b, c, n, k, m, accumulate);
    }
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace mvmae::kernels
