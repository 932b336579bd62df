#pragma once

#include <complex>
#include <cstddef>

// Dense complex array kernels behind the integrator and operator algebra.
//
// Every entry point exists in a scalar reference form and, where the build
// target supports it, a SIMD form (AVX2+FMA on x86-64, NEON on aarch64).
// The active table is picked once at startup from CPU capabilities and can
// be forced with QBATT_KERNELS=scalar|avx2|neon. All variants are
// equivalence-tested against the scalar reference.
//
// Matrices are row-major with an explicit leading dimension (row stride).

namespace qbatt::kernels {

using cdouble = std::complex<double>;

struct KernelTable {
    const char* name;

    // C (m x n, ldc) += alpha * A (m x k, lda) * B (k x n, ldb)
    void (*gemm_acc)(std::size_t m, std::size_t n, std::size_t k, cdouble alpha,
                     const cdouble* a, std::size_t lda,
                     const cdouble* b, std::size_t ldb,
                     cdouble* c, std::size_t ldc);

    // y += alpha * x, contiguous
    void (*axpy)(std::size_t n, cdouble alpha, const cdouble* x, cdouble* y);

    // y = x + alpha * k, contiguous (integration stage formation)
    void (*stage)(std::size_t n, const cdouble* x, double alpha, const cdouble* k,
                  cdouble* y);

    // y += c1 k1 + c2 k2 + c3 k3 + c4 k4, contiguous
    void (*combine4)(std::size_t n, cdouble* y,
                     double c1, const cdouble* k1, double c2, const cdouble* k2,
                     double c3, const cdouble* k3, double c4, const cdouble* k4);

    // C (m x n) += alpha * diag(d) * B  (row i scaled by d[i])
    void (*row_scale_acc)(std::size_t m, std::size_t n, cdouble alpha,
                          const cdouble* d, const cdouble* b, std::size_t ldb,
                          cdouble* c, std::size_t ldc);

    // C (m x n) += alpha * B * diag(d)  (column j scaled by d[j])
    void (*col_scale_acc)(std::size_t m, std::size_t n, cdouble alpha,
                          const cdouble* d, const cdouble* b, std::size_t ldb,
                          cdouble* c, std::size_t ldc);

    // C (n x n) += rate * d_i * conj(d_j) * B_ij  (diagonal jump sandwich)
    void (*sandwich_diag_acc)(std::size_t n, double rate, const cdouble* d,
                              const cdouble* b, std::size_t ldb,
                              cdouble* c, std::size_t ldc);

    // C (n x n) += alpha * (B + B^dagger)
    void (*acc_plus_adjoint)(std::size_t n, cdouble alpha,
                             const cdouble* b, std::size_t ldb,
                             cdouble* c, std::size_t ldc);

    // a := (a + a^dagger)/2; returns max_ij |a_ij - conj(a_ji)| before projection
    double (*hermitize)(std::size_t n, cdouble* a, std::size_t lda);

    cdouble (*trace)(std::size_t n, const cdouble* a, std::size_t lda);

    // max_ij |a_ij - b_ij|; pass b = nullptr for max_ij |a_ij|
    double (*max_abs_diff)(std::size_t m, std::size_t n,
                           const cdouble* a, std::size_t lda,
                           const cdouble* b, std::size_t ldb);

    // sum_ij |a_ij|^2  (purity of a Hermitian density matrix)
    double (*abs2_sum)(std::size_t m, std::size_t n, const cdouble* a,
                       std::size_t lda);
};

const KernelTable& scalar_kernels();

// True when the corresponding SIMD table can run on this machine.
bool avx2_available();
bool neon_available();

const KernelTable* avx2_kernels();  // nullptr when unsupported
const KernelTable* neon_kernels();

// Table selected at first use: QBATT_KERNELS override, else best supported.
const KernelTable& active_kernels();
const char* active_kernel_name();

}  // namespace qbatt::kernels
