#include "qbatt/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

// AVX2+FMA variants. Complex numbers stay interleaved (re,im); a __m256d
// carries two complex doubles. Products split into a_re*b and a_im*swap(b)
// partial sums that addsub recombines, so the inner gemm loop is pure FMA.
// Compiled with per-function target attributes; only dispatched at runtime
// when cpuid reports avx2+fma.

namespace qbatt::kernels {

namespace {

#define QBATT_AVX2 __attribute__((target("avx2,fma")))

QBATT_AVX2 inline __m256d swap_ri(__m256d v) {
    return _mm256_permute_pd(v, 0x5);
}

// z *= alpha for two packed complex values
QBATT_AVX2 inline __m256d cmul_scalar(__m256d z, __m256d alpha_re, __m256d alpha_im) {
    return _mm256_addsub_pd(_mm256_mul_pd(alpha_re, z),
                            _mm256_mul_pd(alpha_im, swap_ri(z)));
}

// elementwise complex product of two packed pairs
QBATT_AVX2 inline __m256d cmul_vec(__m256d z, __m256d w) {
    const __m256d wre = _mm256_movedup_pd(w);
    const __m256d wim = _mm256_permute_pd(w, 0xF);
    return _mm256_addsub_pd(_mm256_mul_pd(wre, z),
                            _mm256_mul_pd(wim, swap_ri(z)));
}

QBATT_AVX2 void gemm_acc_avx2(std::size_t m, std::size_t n, std::size_t k, cdouble alpha,
                              const cdouble* a, std::size_t lda,
                              const cdouble* b, std::size_t ldb,
                              cdouble* c, std::size_t ldc) {
    if (m == 0 || n == 0 || k == 0 || alpha == cdouble(0.0, 0.0)) return;
    const double* bd = reinterpret_cast<const double*>(b);
    double* cd = reinterpret_cast<double*>(c);
    const __m256d al_re = _mm256_set1_pd(alpha.real());
    const __m256d al_im = _mm256_set1_pd(alpha.imag());
    const std::size_t n4 = n - n % 4;

    std::size_t i = 0;
    for (; i + 2 <= m; i += 2) {
        const cdouble* a0 = a + i * lda;
        const cdouble* a1 = a0 + lda;
        double* c0 = cd + 2 * i * ldc;
        double* c1 = c0 + 2 * ldc;
        std::size_t j = 0;
        for (; j < n4; j += 4) {
            __m256d accA00 = _mm256_setzero_pd(), accA01 = _mm256_setzero_pd();
            __m256d accB00 = _mm256_setzero_pd(), accB01 = _mm256_setzero_pd();
            __m256d accA10 = _mm256_setzero_pd(), accA11 = _mm256_setzero_pd();
            __m256d accB10 = _mm256_setzero_pd(), accB11 = _mm256_setzero_pd();
            const double* bp = bd + 2 * j;
            for (std::size_t p = 0; p < k; ++p, bp += 2 * ldb) {
                const __m256d b0 = _mm256_loadu_pd(bp);
                const __m256d b1 = _mm256_loadu_pd(bp + 4);
                const __m256d s0 = swap_ri(b0);
                const __m256d s1 = swap_ri(b1);
                const __m256d ar0 = _mm256_set1_pd(a0[p].real());
                const __m256d ai0 = _mm256_set1_pd(a0[p].imag());
                accA00 = _mm256_fmadd_pd(ar0, b0, accA00);
                accA01 = _mm256_fmadd_pd(ar0, b1, accA01);
                accB00 = _mm256_fmadd_pd(ai0, s0, accB00);
                accB01 = _mm256_fmadd_pd(ai0, s1, accB01);
                const __m256d ar1 = _mm256_set1_pd(a1[p].real());
                const __m256d ai1 = _mm256_set1_pd(a1[p].imag());
                accA10 = _mm256_fmadd_pd(ar1, b0, accA10);
                accA11 = _mm256_fmadd_pd(ar1, b1, accA11);
                accB10 = _mm256_fmadd_pd(ai1, s0, accB10);
                accB11 = _mm256_fmadd_pd(ai1, s1, accB11);
            }
            const __m256d r00 = cmul_scalar(_mm256_addsub_pd(accA00, accB00), al_re, al_im);
            const __m256d r01 = cmul_scalar(_mm256_addsub_pd(accA01, accB01), al_re, al_im);
            const __m256d r10 = cmul_scalar(_mm256_addsub_pd(accA10, accB10), al_re, al_im);
            const __m256d r11 = cmul_scalar(_mm256_addsub_pd(accA11, accB11), al_re, al_im);
            _mm256_storeu_pd(c0 + 2 * j, _mm256_add_pd(_mm256_loadu_pd(c0 + 2 * j), r00));
            _mm256_storeu_pd(c0 + 2 * j + 4, _mm256_add_pd(_mm256_loadu_pd(c0 + 2 * j + 4), r01));
            _mm256_storeu_pd(c1 + 2 * j, _mm256_add_pd(_mm256_loadu_pd(c1 + 2 * j), r10));
            _mm256_storeu_pd(c1 + 2 * j + 4, _mm256_add_pd(_mm256_loadu_pd(c1 + 2 * j + 4), r11));
        }
        for (; j < n; ++j) {
            double s0r = 0, s0i = 0, s1r = 0, s1i = 0;
            for (std::size_t p = 0; p < k; ++p) {
                const cdouble bv = b[p * ldb + j];
                s0r += a0[p].real() * bv.real() - a0[p].imag() * bv.imag();
                s0i += a0[p].real() * bv.imag() + a0[p].imag() * bv.real();
                s1r += a1[p].real() * bv.real() - a1[p].imag() * bv.imag();
                s1i += a1[p].real() * bv.imag() + a1[p].imag() * bv.real();
            }
            c[i * ldc + j] += cdouble(alpha.real() * s0r - alpha.imag() * s0i,
                                      alpha.real() * s0i + alpha.imag() * s0r);
            c[(i + 1) * ldc + j] += cdouble(alpha.real() * s1r - alpha.imag() * s1i,
                                            alpha.real() * s1i + alpha.imag() * s1r);
        }
    }
    if (i < m) {
        const cdouble* a0 = a + i * lda;
        double* c0 = cd + 2 * i * ldc;
        std::size_t j = 0;
        for (; j < n4; j += 4) {
            __m256d accA0 = _mm256_setzero_pd(), accA1 = _mm256_setzero_pd();
            __m256d accB0 = _mm256_setzero_pd(), accB1 = _mm256_setzero_pd();
            const double* bp = bd + 2 * j;
            for (std::size_t p = 0; p < k; ++p, bp += 2 * ldb) {
                const __m256d b0 = _mm256_loadu_pd(bp);
                const __m256d b1 = _mm256_loadu_pd(bp + 4);
                const __m256d ar = _mm256_set1_pd(a0[p].real());
                const __m256d ai = _mm256_set1_pd(a0[p].imag());
                accA0 = _mm256_fmadd_pd(ar, b0, accA0);
                accA1 = _mm256_fmadd_pd(ar, b1, accA1);
                accB0 = _mm256_fmadd_pd(ai, swap_ri(b0), accB0);
                accB1 = _mm256_fmadd_pd(ai, swap_ri(b1), accB1);
            }
            const __m256d r0 = cmul_scalar(_mm256_addsub_pd(accA0, accB0), al_re, al_im);
            const __m256d r1 = cmul_scalar(_mm256_addsub_pd(accA1, accB1), al_re, al_im);
            _mm256_storeu_pd(c0 + 2 * j, _mm256_add_pd(_mm256_loadu_pd(c0 + 2 * j), r0));
            _mm256_storeu_pd(c0 + 2 * j + 4, _mm256_add_pd(_mm256_loadu_pd(c0 + 2 * j + 4), r1));
        }
        for (; j < n; ++j) {
            double sr = 0, si = 0;
            for (std::size_t p = 0; p < k; ++p) {
                const cdouble bv = b[p * ldb + j];
                sr += a0[p].real() * bv.real() - a0[p].imag() * bv.imag();
                si += a0[p].real() * bv.imag() + a0[p].imag() * bv.real();
            }
            c[i * ldc + j] += cdouble(alpha.real() * sr - alpha.imag() * si,
                                      alpha.real() * si + alpha.imag() * sr);
        }
    }
}

QBATT_AVX2 void axpy_avx2(std::size_t n, cdouble alpha, const cdouble* x, cdouble* y) {
    const double* xd = reinterpret_cast<const double*>(x);
    double* yd = reinterpret_cast<double*>(y);
    const __m256d ar = _mm256_set1_pd(alpha.real());
    const __m256d ai = _mm256_set1_pd(alpha.imag());
    const std::size_t n2 = n - n % 2;
    std::size_t i = 0;
    for (; i < n2; i += 2) {
        const __m256d xv = _mm256_loadu_pd(xd + 2 * i);
        const __m256d yv = _mm256_loadu_pd(yd + 2 * i);
        _mm256_storeu_pd(yd + 2 * i, _mm256_add_pd(yv, cmul_scalar(xv, ar, ai)));
    }
    for (; i < n; ++i) {
        y[i] += cdouble(alpha.real() * x[i].real() - alpha.imag() * x[i].imag(),
                        alpha.real() * x[i].imag() + alpha.imag() * x[i].real());
    }
}

QBATT_AVX2 void stage_avx2(std::size_t n, const cdouble* x, double alpha,
                           const cdouble* k, cdouble* y) {
    const double* xd = reinterpret_cast<const double*>(x);
    const double* kd = reinterpret_cast<const double*>(k);
    double* yd = reinterpret_cast<double*>(y);
    const __m256d av = _mm256_set1_pd(alpha);
    const std::size_t n2 = n - n % 2;
    std::size_t i = 0;
    for (; i < n2; i += 2) {
        _mm256_storeu_pd(yd + 2 * i,
                         _mm256_fmadd_pd(av, _mm256_loadu_pd(kd + 2 * i),
                                         _mm256_loadu_pd(xd + 2 * i)));
    }
    for (; i < n; ++i) {
        y[i] = cdouble(x[i].real() + alpha * k[i].real(),
                       x[i].imag() + alpha * k[i].imag());
    }
}

QBATT_AVX2 void combine4_avx2(std::size_t n, cdouble* y,
                              double c1, const cdouble* k1, double c2, const cdouble* k2,
                              double c3, const cdouble* k3, double c4, const cdouble* k4) {
    double* yd = reinterpret_cast<double*>(y);
    const double* k1d = reinterpret_cast<const double*>(k1);
    const double* k2d = reinterpret_cast<const double*>(k2);
    const double* k3d = reinterpret_cast<const double*>(k3);
    const double* k4d = reinterpret_cast<const double*>(k4);
    const __m256d c1v = _mm256_set1_pd(c1), c2v = _mm256_set1_pd(c2);
    const __m256d c3v = _mm256_set1_pd(c3), c4v = _mm256_set1_pd(c4);
    const std::size_t n2 = n - n % 2;
    std::size_t i = 0;
    for (; i < n2; i += 2) {
        __m256d acc = _mm256_loadu_pd(yd + 2 * i);
        acc = _mm256_fmadd_pd(c1v, _mm256_loadu_pd(k1d + 2 * i), acc);
        acc = _mm256_fmadd_pd(c2v, _mm256_loadu_pd(k2d + 2 * i), acc);
        acc = _mm256_fmadd_pd(c3v, _mm256_loadu_pd(k3d + 2 * i), acc);
        acc = _mm256_fmadd_pd(c4v, _mm256_loadu_pd(k4d + 2 * i), acc);
        _mm256_storeu_pd(yd + 2 * i, acc);
    }
    for (; i < n; ++i) {
        y[i] += cdouble(c1 * k1[i].real() + c2 * k2[i].real() + c3 * k3[i].real() + c4 * k4[i].real(),
                        c1 * k1[i].imag() + c2 * k2[i].imag() + c3 * k3[i].imag() + c4 * k4[i].imag());
    }
}

QBATT_AVX2 void row_scale_acc_avx2(std::size_t m, std::size_t n, cdouble alpha,
                                   const cdouble* d, const cdouble* b, std::size_t ldb,
                                   cdouble* c, std::size_t ldc) {
    const std::size_t n2 = n - n % 2;
    for (std::size_t i = 0; i < m; ++i) {
        const cdouble f(alpha.real() * d[i].real() - alpha.imag() * d[i].imag(),
                        alpha.real() * d[i].imag() + alpha.imag() * d[i].real());
        const __m256d fr = _mm256_set1_pd(f.real());
        const __m256d fi = _mm256_set1_pd(f.imag());
        const double* brow = reinterpret_cast<const double*>(b + i * ldb);
        double* crow = reinterpret_cast<double*>(c + i * ldc);
        std::size_t j = 0;
        for (; j < n2; j += 2) {
            const __m256d bv = _mm256_loadu_pd(brow + 2 * j);
            const __m256d cv = _mm256_loadu_pd(crow + 2 * j);
            _mm256_storeu_pd(crow + 2 * j, _mm256_add_pd(cv, cmul_scalar(bv, fr, fi)));
        }
        for (; j < n; ++j) {
            const cdouble bv = b[i * ldb + j];
            c[i * ldc + j] += cdouble(f.real() * bv.real() - f.imag() * bv.imag(),
                                      f.real() * bv.imag() + f.imag() * bv.real());
        }
    }
}

QBATT_AVX2 void col_scale_acc_avx2(std::size_t m, std::size_t n, cdouble alpha,
                                   const cdouble* d, const cdouble* b, std::size_t ldb,
                                   cdouble* c, std::size_t ldc) {
    const double* dd = reinterpret_cast<const double*>(d);
    const __m256d ar = _mm256_set1_pd(alpha.real());
    const __m256d ai = _mm256_set1_pd(alpha.imag());
    const std::size_t n2 = n - n % 2;
    for (std::size_t i = 0; i < m; ++i) {
        const double* brow = reinterpret_cast<const double*>(b + i * ldb);
        double* crow = reinterpret_cast<double*>(c + i * ldc);
        std::size_t j = 0;
        for (; j < n2; j += 2) {
            const __m256d bv = _mm256_loadu_pd(brow + 2 * j);
            const __m256d dv = _mm256_loadu_pd(dd + 2 * j);
            const __m256d prod = cmul_vec(bv, dv);
            const __m256d cv = _mm256_loadu_pd(crow + 2 * j);
            _mm256_storeu_pd(crow + 2 * j, _mm256_add_pd(cv, cmul_scalar(prod, ar, ai)));
        }
        for (; j < n; ++j) {
            const cdouble f(alpha.real() * d[j].real() - alpha.imag() * d[j].imag(),
                            alpha.real() * d[j].imag() + alpha.imag() * d[j].real());
            const cdouble bv = b[i * ldb + j];
            c[i * ldc + j] += cdouble(f.real() * bv.real() - f.imag() * bv.imag(),
                                      f.real() * bv.imag() + f.imag() * bv.real());
        }
    }
}

QBATT_AVX2 void sandwich_diag_acc_avx2(std::size_t n, double rate, const cdouble* d,
                                       const cdouble* b, std::size_t ldb,
                                       cdouble* c, std::size_t ldc) {
    const double* dd = reinterpret_cast<const double*>(d);
    const __m256d conj_mask = _mm256_set_pd(-0.0, 0.0, -0.0, 0.0);
    const std::size_t n2 = n - n % 2;
    for (std::size_t i = 0; i < n; ++i) {
        const cdouble f(rate * d[i].real(), rate * d[i].imag());
        const __m256d fr = _mm256_set1_pd(f.real());
        const __m256d fi = _mm256_set1_pd(f.imag());
        const double* brow = reinterpret_cast<const double*>(b + i * ldb);
        double* crow = reinterpret_cast<double*>(c + i * ldc);
        std::size_t j = 0;
        for (; j < n2; j += 2) {
            const __m256d dv = _mm256_xor_pd(_mm256_loadu_pd(dd + 2 * j), conj_mask);
            const __m256d bv = _mm256_loadu_pd(brow + 2 * j);
            const __m256d prod = cmul_vec(bv, dv);
            const __m256d cv = _mm256_loadu_pd(crow + 2 * j);
            _mm256_storeu_pd(crow + 2 * j, _mm256_add_pd(cv, cmul_scalar(prod, fr, fi)));
        }
        for (; j < n; ++j) {
            const cdouble fj = f * std::conj(d[j]);
            const cdouble bv = b[i * ldb + j];
            c[i * ldc + j] += cdouble(fj.real() * bv.real() - fj.imag() * bv.imag(),
                                      fj.real() * bv.imag() + fj.imag() * bv.real());
        }
    }
}

QBATT_AVX2 double abs2_sum_avx2(std::size_t m, std::size_t n, const cdouble* a,
                                std::size_t lda) {
    __m256d acc = _mm256_setzero_pd();
    double tail = 0.0;
    const std::size_t n2 = n - n % 2;
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = reinterpret_cast<const double*>(a + i * lda);
        std::size_t j = 0;
        for (; j < n2; j += 2) {
            const __m256d v = _mm256_loadu_pd(arow + 2 * j);
            acc = _mm256_fmadd_pd(v, v, acc);
        }
        for (; j < n; ++j) {
            const cdouble v = a[i * lda + j];
            tail += v.real() * v.real() + v.imag() * v.imag();
        }
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    return lanes[0] + lanes[1] + lanes[2] + lanes[3] + tail;
}

#undef QBATT_AVX2

}  // namespace

bool avx2_available() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const KernelTable* avx2_kernels() {
    if (!avx2_available()) return nullptr;
    const KernelTable& ref = scalar_kernels();
    static const KernelTable table = {
        "avx2",
        gemm_acc_avx2,
        axpy_avx2,
        stage_avx2,
        combine4_avx2,
        row_scale_acc_avx2,
        col_scale_acc_avx2,
        sandwich_diag_acc_avx2,
        ref.acc_plus_adjoint,  // O(n^2) transpose-access walk, left scalar
        ref.hermitize,
        ref.trace,
        ref.max_abs_diff,
        abs2_sum_avx2,
    };
    return &table;
}

}  // namespace qbatt::kernels

#else

namespace qbatt::kernels {
bool avx2_available() { return false; }
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace qbatt::kernels

#endif
