#include "qbatt/kernels.hpp"

#include <cmath>

// Reference kernels. Arithmetic is written on explicit re/im doubles so the
// compiler emits plain mul/add instead of the library complex-multiply call;
// the SIMD variants must reproduce these results up to FMA rounding.

namespace qbatt::kernels {

namespace {

inline double re(const cdouble& z) { return z.real(); }
inline double im(const cdouble& z) { return z.imag(); }

void gemm_acc_scalar(std::size_t m, std::size_t n, std::size_t k, cdouble alpha,
                     const cdouble* a, std::size_t lda,
                     const cdouble* b, std::size_t ldb,
                     cdouble* c, std::size_t ldc) {
    if (alpha == cdouble(0.0, 0.0)) return;
    const double ar = re(alpha), ai = im(alpha);
    for (std::size_t i = 0; i < m; ++i) {
        const cdouble* arow = a + i * lda;
        cdouble* crow = c + i * ldc;
        for (std::size_t p = 0; p < k; ++p) {
            const double xr = re(arow[p]), xi = im(arow[p]);
            // fold alpha into the broadcast scalar once per (i,p)
            const double sr = ar * xr - ai * xi;
            const double si = ar * xi + ai * xr;
            if (sr == 0.0 && si == 0.0) continue;
            const cdouble* brow = b + p * ldb;
            for (std::size_t j = 0; j < n; ++j) {
                const double br = re(brow[j]), bi = im(brow[j]);
                crow[j] += cdouble(sr * br - si * bi, sr * bi + si * br);
            }
        }
    }
}

void axpy_scalar(std::size_t n, cdouble alpha, const cdouble* x, cdouble* y) {
    const double ar = re(alpha), ai = im(alpha);
    for (std::size_t i = 0; i < n; ++i) {
        const double xr = re(x[i]), xi = im(x[i]);
        y[i] += cdouble(ar * xr - ai * xi, ar * xi + ai * xr);
    }
}

void stage_scalar(std::size_t n, const cdouble* x, double alpha, const cdouble* k,
                  cdouble* y) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = cdouble(re(x[i]) + alpha * re(k[i]), im(x[i]) + alpha * im(k[i]));
    }
}

void combine4_scalar(std::size_t n, cdouble* y,
                     double c1, const cdouble* k1, double c2, const cdouble* k2,
                     double c3, const cdouble* k3, double c4, const cdouble* k4) {
    for (std::size_t i = 0; i < n; ++i) {
        const double rr = c1 * re(k1[i]) + c2 * re(k2[i]) + c3 * re(k3[i]) + c4 * re(k4[i]);
        const double ri = c1 * im(k1[i]) + c2 * im(k2[i]) + c3 * im(k3[i]) + c4 * im(k4[i]);
        y[i] += cdouble(rr, ri);
    }
}

void row_scale_acc_scalar(std::size_t m, std::size_t n, cdouble alpha,
                          const cdouble* d, const cdouble* b, std::size_t ldb,
                          cdouble* c, std::size_t ldc) {
    const double ar = re(alpha), ai = im(alpha);
    for (std::size_t i = 0; i < m; ++i) {
        const double dr = re(d[i]), di = im(d[i]);
        const double sr = ar * dr - ai * di;
        const double si = ar * di + ai * dr;
        const cdouble* brow = b + i * ldb;
        cdouble* crow = c + i * ldc;
        for (std::size_t j = 0; j < n; ++j) {
            const double br = re(brow[j]), bi = im(brow[j]);
            crow[j] += cdouble(sr * br - si * bi, sr * bi + si * br);
        }
    }
}

void col_scale_acc_scalar(std::size_t m, std::size_t n, cdouble alpha,
                          const cdouble* d, const cdouble* b, std::size_t ldb,
                          cdouble* c, std::size_t ldc) {
    const double ar = re(alpha), ai = im(alpha);
    for (std::size_t i = 0; i < m; ++i) {
        const cdouble* brow = b + i * ldb;
        cdouble* crow = c + i * ldc;
        for (std::size_t j = 0; j < n; ++j) {
            const double dr = re(d[j]), di = im(d[j]);
            const double sr = ar * dr - ai * di;
            const double si = ar * di + ai * dr;
            const double br = re(brow[j]), bi = im(brow[j]);
            crow[j] += cdouble(sr * br - si * bi, sr * bi + si * br);
        }
    }
}

void sandwich_diag_acc_scalar(std::size_t n, double rate, const cdouble* d,
                              const cdouble* b, std::size_t ldb,
                              cdouble* c, std::size_t ldc) {
    for (std::size_t i = 0; i < n; ++i) {
        const double dir = re(d[i]), dii = im(d[i]);
        const cdouble* brow = b + i * ldb;
        cdouble* crow = c + i * ldc;
        for (std::size_t j = 0; j < n; ++j) {
            // rate * d_i * conj(d_j)
            const double djr = re(d[j]), dji = -im(d[j]);
            const double fr = rate * (dir * djr - dii * dji);
            const double fi = rate * (dir * dji + dii * djr);
            const double br = re(brow[j]), bi = im(brow[j]);
            crow[j] += cdouble(fr * br - fi * bi, fr * bi + fi * br);
        }
    }
}

void acc_plus_adjoint_scalar(std::size_t n, cdouble alpha,
                             const cdouble* b, std::size_t ldb,
                             cdouble* c, std::size_t ldc) {
    const double ar = re(alpha), ai = im(alpha);
    for (std::size_t i = 0; i < n; ++i) {
        cdouble* crow = c + i * ldc;
        const cdouble* brow = b + i * ldb;
        for (std::size_t j = 0; j < n; ++j) {
            // b_ij + conj(b_ji)
            const double sr = re(brow[j]) + re(b[j * ldb + i]);
            const double si = im(brow[j]) - im(b[j * ldb + i]);
            crow[j] += cdouble(ar * sr - ai * si, ar * si + ai * sr);
        }
    }
}

double hermitize_scalar(std::size_t n, cdouble* a, std::size_t lda) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        // diagonal: drop the imaginary part
        cdouble& aii = a[i * lda + i];
        worst = std::max(worst, std::abs(im(aii)));
        aii = cdouble(re(aii), 0.0);
        for (std::size_t j = i + 1; j < n; ++j) {
            cdouble& x = a[i * lda + j];
            cdouble& y = a[j * lda + i];
            const double dr = re(x) - re(y);
            const double di = im(x) + im(y);
            const double asym = std::hypot(dr, di);
            if (asym > worst) worst = asym;
            const double mr = 0.5 * (re(x) + re(y));
            const double mi = 0.5 * (im(x) - im(y));
            x = cdouble(mr, mi);
            y = cdouble(mr, -mi);
        }
    }
    return worst;
}

cdouble trace_scalar(std::size_t n, const cdouble* a, std::size_t lda) {
    double tr = 0.0, ti = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        tr += re(a[i * lda + i]);
        ti += im(a[i * lda + i]);
    }
    return {tr, ti};
}

double max_abs_diff_scalar(std::size_t m, std::size_t n,
                           const cdouble* a, std::size_t lda,
                           const cdouble* b, std::size_t ldb) {
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const cdouble* arow = a + i * lda;
        const cdouble* brow = b ? b + i * ldb : nullptr;
        for (std::size_t j = 0; j < n; ++j) {
            const double dr = brow ? re(arow[j]) - re(brow[j]) : re(arow[j]);
            const double di = brow ? im(arow[j]) - im(brow[j]) : im(arow[j]);
            const double v = std::hypot(dr, di);
            if (v > worst) worst = v;
        }
    }
    return worst;
}

double abs2_sum_scalar(std::size_t m, std::size_t n, const cdouble* a,
                       std::size_t lda) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const cdouble* arow = a + i * lda;
        for (std::size_t j = 0; j < n; ++j) {
            s += re(arow[j]) * re(arow[j]) + im(arow[j]) * im(arow[j]);
        }
    }
    return s;
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table = {
        "scalar",
        gemm_acc_scalar,
        axpy_scalar,
        stage_scalar,
        combine4_scalar,
        row_scale_acc_scalar,
        col_scale_acc_scalar,
        sandwich_diag_acc_scalar,
        acc_plus_adjoint_scalar,
        hermitize_scalar,
        trace_scalar,
        max_abs_diff_scalar,
        abs2_sum_scalar,
    };
    return table;
}

}  // namespace qbatt::kernels
