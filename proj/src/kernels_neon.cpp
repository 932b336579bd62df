#include "qbatt/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

// NEON variants for aarch64. A float64x2_t holds one complex double; the
// accumulation scheme mirrors the AVX2 lane (separate a_re and a_im partial
// sums, recombined with a (-1,+1) sign vector) so results agree with the
// scalar reference up to FMA rounding.

namespace qbatt::kernels {

namespace {

inline float64x2_t swap_ri(float64x2_t v) { return vextq_f64(v, v, 1); }

// sign = (-1, +1): accA + sign * accB recombines re/im partial sums
inline float64x2_t recombine(float64x2_t acc_a, float64x2_t acc_b) {
    const float64x2_t sign = {-1.0, 1.0};
    return vfmaq_f64(acc_a, sign, acc_b);
}

inline float64x2_t cmul(float64x2_t z, double wr, double wi) {
    const float64x2_t t = vmulq_n_f64(z, wr);
    return recombine(t, vmulq_n_f64(swap_ri(z), wi));
}

void gemm_acc_neon(std::size_t m, std::size_t n, std::size_t k, cdouble alpha,
                   const cdouble* a, std::size_t lda,
                   const cdouble* b, std::size_t ldb,
                   cdouble* c, std::size_t ldc) {
    if (m == 0 || n == 0 || k == 0 || alpha == cdouble(0.0, 0.0)) return;
    const double* bd = reinterpret_cast<const double*>(b);
    double* cd = reinterpret_cast<double*>(c);
    const std::size_t n4 = n - n % 4;
    for (std::size_t i = 0; i < m; ++i) {
        const cdouble* arow = a + i * lda;
        double* crow = cd + 2 * i * ldc;
        std::size_t j = 0;
        for (; j < n4; j += 4) {
            float64x2_t accA0 = vdupq_n_f64(0.0), accA1 = accA0, accA2 = accA0, accA3 = accA0;
            float64x2_t accB0 = accA0, accB1 = accA0, accB2 = accA0, accB3 = accA0;
            const double* bp = bd + 2 * j;
            for (std::size_t p = 0; p < k; ++p, bp += 2 * ldb) {
                const float64x2_t b0 = vld1q_f64(bp);
                const float64x2_t b1 = vld1q_f64(bp + 2);
                const float64x2_t b2 = vld1q_f64(bp + 4);
                const float64x2_t b3 = vld1q_f64(bp + 6);
                const double ar = arow[p].real(), ai = arow[p].imag();
                accA0 = vfmaq_n_f64(accA0, b0, ar);
                accA1 = vfmaq_n_f64(accA1, b1, ar);
                accA2 = vfmaq_n_f64(accA2, b2, ar);
                accA3 = vfmaq_n_f64(accA3, b3, ar);
                accB0 = vfmaq_n_f64(accB0, swap_ri(b0), ai);
                accB1 = vfmaq_n_f64(accB1, swap_ri(b1), ai);
                accB2 = vfmaq_n_f64(accB2, swap_ri(b2), ai);
                accB3 = vfmaq_n_f64(accB3, swap_ri(b3), ai);
            }
            const double alr = alpha.real(), ali = alpha.imag();
            float64x2_t r0 = cmul(recombine(accA0, accB0), alr, ali);
            float64x2_t r1 = cmul(recombine(accA1, accB1), alr, ali);
            float64x2_t r2 = cmul(recombine(accA2, accB2), alr, ali);
            float64x2_t r3 = cmul(recombine(accA3, accB3), alr, ali);
            vst1q_f64(crow + 2 * j, vaddq_f64(vld1q_f64(crow + 2 * j), r0));
            vst1q_f64(crow + 2 * j + 2, vaddq_f64(vld1q_f64(crow + 2 * j + 2), r1));
            vst1q_f64(crow + 2 * j + 4, vaddq_f64(vld1q_f64(crow + 2 * j + 4), r2));
            vst1q_f64(crow + 2 * j + 6, vaddq_f64(vld1q_f64(crow + 2 * j + 6), r3));
        }
        for (; j < n; ++j) {
            double sr = 0, si = 0;
            for (std::size_t p = 0; p < k; ++p) {
                const cdouble bv = b[p * ldb + j];
                sr += arow[p].real() * bv.real() - arow[p].imag() * bv.imag();
                si += arow[p].real() * bv.imag() + arow[p].imag() * bv.real();
            }
            c[i * ldc + j] += cdouble(alpha.real() * sr - alpha.imag() * si,
                                      alpha.real() * si + alpha.imag() * sr);
        }
    }
}

void axpy_neon(std::size_t n, cdouble alpha, const cdouble* x, cdouble* y) {
    const double* xd = reinterpret_cast<const double*>(x);
    double* yd = reinterpret_cast<double*>(y);
    for (std::size_t i = 0; i < n; ++i) {
        const float64x2_t xv = vld1q_f64(xd + 2 * i);
        const float64x2_t yv = vld1q_f64(yd + 2 * i);
        vst1q_f64(yd + 2 * i, vaddq_f64(yv, cmul(xv, alpha.real(), alpha.imag())));
    }
}

void stage_neon(std::size_t n, const cdouble* x, double alpha, const cdouble* k,
                cdouble* y) {
    const double* xd = reinterpret_cast<const double*>(x);
    const double* kd = reinterpret_cast<const double*>(k);
    double* yd = reinterpret_cast<double*>(y);
    for (std::size_t i = 0; i < n; ++i) {
        vst1q_f64(yd + 2 * i, vfmaq_n_f64(vld1q_f64(xd + 2 * i), vld1q_f64(kd + 2 * i), alpha));
    }
}

void combine4_neon(std::size_t n, cdouble* y,
                   double c1, const cdouble* k1, double c2, const cdouble* k2,
                   double c3, const cdouble* k3, double c4, const cdouble* k4) {
    double* yd = reinterpret_cast<double*>(y);
    const double* k1d = reinterpret_cast<const double*>(k1);
    const double* k2d = reinterpret_cast<const double*>(k2);
    const double* k3d = reinterpret_cast<const double*>(k3);
    const double* k4d = reinterpret_cast<const double*>(k4);
    for (std::size_t i = 0; i < n; ++i) {
        float64x2_t acc = vld1q_f64(yd + 2 * i);
        acc = vfmaq_n_f64(acc, vld1q_f64(k1d + 2 * i), c1);
        acc = vfmaq_n_f64(acc, vld1q_f64(k2d + 2 * i), c2);
        acc = vfmaq_n_f64(acc, vld1q_f64(k3d + 2 * i), c3);
        acc = vfmaq_n_f64(acc, vld1q_f64(k4d + 2 * i), c4);
        vst1q_f64(yd + 2 * i, acc);
    }
}

}  // namespace

bool neon_available() { return true; }

const KernelTable* neon_kernels() {
    const KernelTable& ref = scalar_kernels();
    static const KernelTable table = {
        "neon",
        gemm_acc_neon,
        axpy_neon,
        stage_neon,
        combine4_neon,
        ref.row_scale_acc,
        ref.col_scale_acc,
        ref.sandwich_diag_acc,
        ref.acc_plus_adjoint,
        ref.hermitize,
        ref.trace,
        ref.max_abs_diff,
        ref.abs2_sum,
    };
    return &table;
}

}  // namespace qbatt::kernels

#else

namespace qbatt::kernels {
bool neon_available() { return false; }
const KernelTable* neon_kernels() { return nullptr; }
}  // namespace qbatt::kernels

#endif
