#include <doctest.h>

#include <complex>
#include <random>
#include <vector>

#include "qbatt/kernels.hpp"

using qbatt::kernels::cdouble;
using qbatt::kernels::KernelTable;

namespace {

std::vector<cdouble> random_matrix(std::mt19937& rng, std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<cdouble> m(rows * cols);
    for (auto& z : m) z = cdouble(dist(rng), dist(rng));
    return m;
}

double max_diff(const std::vector<cdouble>& a, const std::vector<cdouble>& b) {
    double worst = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

// plain triple loop, no fused operations; the ground truth for both lanes
void gemm_naive(std::size_t m, std::size_t n, std::size_t k, cdouble alpha,
                const cdouble* a, std::size_t lda, const cdouble* b, std::size_t ldb,
                cdouble* c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            cdouble sum(0, 0);
            for (std::size_t p = 0; p < k; ++p) sum += a[i * lda + p] * b[p * ldb + j];
            c[i * ldc + j] += alpha * sum;
        }
    }
}

std::vector<const KernelTable*> lanes_under_test() {
    std::vector<const KernelTable*> lanes = {&qbatt::kernels::scalar_kernels()};
    if (const KernelTable* t = qbatt::kernels::avx2_kernels()) lanes.push_back(t);
    if (const KernelTable* t = qbatt::kernels::neon_kernels()) lanes.push_back(t);
    return lanes;
}

}  // namespace

TEST_CASE("gemm_acc matches the naive product on assorted shapes") {
    std::mt19937 rng(12345);
    // shapes cover the panel forms the engine uses, including odd tails
    const std::size_t shapes[][3] = {{1, 1, 1},  {2, 4, 3},   {3, 3, 3},  {5, 7, 2},
                                     {27, 30, 27}, {10, 81, 10}, {4, 270, 9}, {13, 5, 11}};
    for (const auto* lane : lanes_under_test()) {
        CAPTURE(lane->name);
        for (const auto& s : shapes) {
            const std::size_t m = s[0], n = s[1], k = s[2];
            auto a = random_matrix(rng, m, k);
            auto b = random_matrix(rng, k, n);
            auto c0 = random_matrix(rng, m, n);
            const cdouble alpha(0.7, -0.3);

            auto c_ref = c0;
            gemm_naive(m, n, k, alpha, a.data(), k, b.data(), n, c_ref.data(), n);
            auto c_lane = c0;
            lane->gemm_acc(m, n, k, alpha, a.data(), k, b.data(), n, c_lane.data(), n);
            CHECK(max_diff(c_ref, c_lane) < 1e-12 * static_cast<double>(k));
        }
    }
}

TEST_CASE("gemm_acc honors leading dimensions (strided panels)") {
    std::mt19937 rng(999);
    const std::size_t m = 9, n = 7, k = 9, lda = 15, ldb = 12, ldc = 20;
    auto a = random_matrix(rng, m, lda);
    auto b = random_matrix(rng, k, ldb);
    auto c0 = random_matrix(rng, m, ldc);
    const cdouble alpha(1.0, 0.5);
    for (const auto* lane : lanes_under_test()) {
        CAPTURE(lane->name);
        auto c_ref = c0;
        gemm_naive(m, n, k, alpha, a.data(), lda, b.data(), ldb, c_ref.data(), ldc);
        auto c_lane = c0;
        lane->gemm_acc(m, n, k, alpha, a.data(), lda, b.data(), ldb, c_lane.data(), ldc);
        CHECK(max_diff(c_ref, c_lane) < 1e-12);
    }
}

TEST_CASE("gemm_acc with zero alpha leaves the accumulator untouched") {
    std::mt19937 rng(7);
    auto a = random_matrix(rng, 4, 4);
    auto b = random_matrix(rng, 4, 4);
    auto c = random_matrix(rng, 4, 4);
    const auto c_before = c;
    for (const auto* lane : lanes_under_test()) {
        lane->gemm_acc(4, 4, 4, cdouble(0, 0), a.data(), 4, b.data(), 4, c.data(), 4);
        CHECK(max_diff(c, c_before) == 0.0);
    }
}

TEST_CASE("vector kernels agree with scalar reference") {
    std::mt19937 rng(4242);
    const auto& ref = qbatt::kernels::scalar_kernels();
    const std::size_t n = 257;  // odd length exercises tails

    for (const auto* lane : lanes_under_test()) {
        CAPTURE(lane->name);

        auto x = random_matrix(rng, 1, n);
        auto y0 = random_matrix(rng, 1, n);
        const cdouble alpha(0.3, -1.1);

        auto y_ref = y0;
        ref.axpy(n, alpha, x.data(), y_ref.data());
        auto y_lane = y0;
        lane->axpy(n, alpha, x.data(), y_lane.data());
        CHECK(max_diff(y_ref, y_lane) < 1e-14);

        auto kbuf = random_matrix(rng, 1, n);
        std::vector<cdouble> s_ref(n), s_lane(n);
        ref.stage(n, x.data(), 0.37, kbuf.data(), s_ref.data());
        lane->stage(n, x.data(), 0.37, kbuf.data(), s_lane.data());
        CHECK(max_diff(s_ref, s_lane) < 1e-14);

        auto k1 = random_matrix(rng, 1, n), k2 = random_matrix(rng, 1, n);
        auto k3 = random_matrix(rng, 1, n), k4 = random_matrix(rng, 1, n);
        auto acc_ref = y0, acc_lane = y0;
        ref.combine4(n, acc_ref.data(), 0.1, k1.data(), 0.2, k2.data(), 0.3, k3.data(), 0.4,
                     k4.data());
        lane->combine4(n, acc_lane.data(), 0.1, k1.data(), 0.2, k2.data(), 0.3, k3.data(),
                       0.4, k4.data());
        CHECK(max_diff(acc_ref, acc_lane) < 1e-14);
    }
}

TEST_CASE("scaling and sandwich kernels agree with scalar reference") {
    std::mt19937 rng(31337);
    const std::size_t m = 13, n = 13;
    const auto& ref = qbatt::kernels::scalar_kernels();
    for (const auto* lane : lanes_under_test()) {
        CAPTURE(lane->name);
        auto d = random_matrix(rng, 1, std::max(m, n));
        auto b = random_matrix(rng, m, n);
        auto c0 = random_matrix(rng, m, n);
        const cdouble alpha(-0.4, 0.9);

        auto c_ref = c0, c_lane = c0;
        ref.row_scale_acc(m, n, alpha, d.data(), b.data(), n, c_ref.data(), n);
        lane->row_scale_acc(m, n, alpha, d.data(), b.data(), n, c_lane.data(), n);
        CHECK(max_diff(c_ref, c_lane) < 1e-13);

        c_ref = c0;
        c_lane = c0;
        ref.col_scale_acc(m, n, alpha, d.data(), b.data(), n, c_ref.data(), n);
        lane->col_scale_acc(m, n, alpha, d.data(), b.data(), n, c_lane.data(), n);
        CHECK(max_diff(c_ref, c_lane) < 1e-13);

        c_ref = c0;
        c_lane = c0;
        ref.sandwich_diag_acc(n, 0.77, d.data(), b.data(), n, c_ref.data(), n);
        lane->sandwich_diag_acc(n, 0.77, d.data(), b.data(), n, c_lane.data(), n);
        CHECK(max_diff(c_ref, c_lane) < 1e-13);

        CHECK(std::abs(ref.abs2_sum(m, n, b.data(), n) - lane->abs2_sum(m, n, b.data(), n)) <
              1e-12);
    }
}

TEST_CASE("hermitize projects and reports the asymmetry") {
    const auto& ref = qbatt::kernels::scalar_kernels();
    std::vector<cdouble> a = {{1.0, 0.5}, {2.0, 1.0}, {2.0, -1.0 + 1e-3}, {3.0, 0.0}};
    const double asym = ref.hermitize(2, a.data(), 2);
    CHECK(asym == doctest::Approx(0.5).epsilon(0.5));  // diagonal imag dominates here
    CHECK(a[0].imag() == 0.0);
    CHECK(a[3].imag() == 0.0);
    CHECK(a[1] == std::conj(a[2]));
}

TEST_CASE("acc_plus_adjoint accumulates B + B^dagger") {
    std::mt19937 rng(5);
    const std::size_t n = 6;
    const auto& ref = qbatt::kernels::scalar_kernels();
    auto b = random_matrix(rng, n, n);
    std::vector<cdouble> c(n * n, cdouble(0, 0));
    ref.acc_plus_adjoint(n, cdouble(-1.0, 0.0), b.data(), n, c.data(), n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            CHECK(std::abs(c[i * n + j] - (-(b[i * n + j] + std::conj(b[j * n + i])))) <
                  1e-15);
}

TEST_CASE("active kernel dispatch resolves to a supported lane") {
    const char* name = qbatt::kernels::active_kernel_name();
    const bool known = std::string(name) == "scalar" || std::string(name) == "avx2" ||
                       std::string(name) == "neon";
    CHECK(known);
}
