#include <gtest/gtest.h>

#include <omp.h>

#include <string>
#include <vector>

#include "mvmae/kernels.hpp"
#include "mvmae/rng.hpp"

namespace mvmae {
namespace {

std::vector<double> random_matrix(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

struct Dims {
    std::size_t n, k, m;
};

class KernelAgreement : public ::testing::TestWithParam<Dims> {};

// The OpenMP variants must reproduce the serial reference exactly, with more
// threads than cores so partitioning actually happens.
TEST_P(KernelAgreement, ParallelMatchesSerialBitwise) {
    const auto [n, k, m] = GetParam();
    Rng rng(n * 131 + k * 17 + m);
    const auto a = random_matrix(rng, n * k);
    const auto b = random_matrix(rng, k * m);
    const auto bt = random_matrix(rng, m * k);
    const auto an = random_matrix(rng, n * m);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(4);

    for (bool acc : {false, true}) {
        std::vector<double> init = random_matrix(rng, n * m);
        auto c1 = init, c2 = init;
        kernels::serial::matmul(a.data(), b.data(), c1.data(), n, k, m, acc);
        kernels::parallel::matmul(a.data(), b.data(), c2.data(), n, k, m, acc);
        EXPECT_EQ(c1, c2);

        c1 = init;
        c2 = init;
        kernels::serial::matmul_nt(a.data(), bt.data(), c1.data(), n, k, m, acc);
        kernels::parallel::matmul_nt(a.data(), bt.data(), c2.data(), n, k, m, acc);
        EXPECT_EQ(c1, c2);

        std::vector<double> init_t = random_matrix(rng, k * m);
        auto d1 = init_t, d2 = init_t;
        kernels::serial::matmul_tn(a.data(), an.data(), d1.data(), n, k, m, acc);
        kernels::parallel::matmul_tn(a.data(), an.data(), d2.data(), n, k, m, acc);
        EXPECT_EQ(d1, d2);
    }
    omp_set_num_threads(saved);
}

INSTANTIATE_TEST_SUITE_P(Shapes, KernelAgreement,
                         ::testing::Values(Dims{1, 1, 1}, Dims{3, 5, 7}, Dims{17, 32, 9},
                                           Dims{64, 64, 64}, Dims{128, 96, 80}),
                         [](const ::testing::TestParamInfo<Dims>& info) {
                             const Dims& d = info.param;
                             return std::to_string(d.n) + "x" + std::to_string(d.k) + "x" +
                                    std::to_string(d.m);
                         });

TEST(Kernels, MatmulMatchesNaiveTripleLoop) {
    Rng rng(7);
    const std::size_t n = 4, k = 3, m = 5;
    const auto a = random_matrix(rng, n * k);
    const auto b = random_matrix(rng, k * m);
    std::vector<double> c(n * m);
    kernels::matmul(a.data(), b.data(), c.data(), n, k, m, false);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * m + j];
            EXPECT_DOUBLE_EQ(c[i * m + j], s);
        }
    }
}

}  // namespace
}  // namespace mvmae
