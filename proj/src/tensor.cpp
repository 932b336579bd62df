#include "qbatt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <utility>

#include <lapacke.h>

#include "qbatt/kernels.hpp"

namespace qbatt {

namespace {

std::size_t sq(int n) { return static_cast<std::size_t>(n) * static_cast<std::size_t>(n); }

// Flat-index contributions of one slot group. offsets[i] is the row-major
// contribution of sub-index i running over the given slots only.
std::vector<int> slot_offsets(const HilbertLayout& layout, const std::vector<int>& slots) {
    int count = 1;
    for (int s : slots) count *= layout.dim(s);
    std::vector<int> offsets(static_cast<std::size_t>(count), 0);
    int repeat = 1;
    for (auto it = slots.rbegin(); it != slots.rend(); ++it) {
        const int d = layout.dim(*it);
        const int stride = layout.stride(*it);
        for (int i = 0; i < count; ++i) {
            offsets[static_cast<std::size_t>(i)] += ((i / repeat) % d) * stride;
        }
        repeat *= d;
    }
    return offsets;
}

std::vector<int> complement_slots(const HilbertLayout& layout, const std::vector<int>& slots) {
    std::vector<int> rest;
    for (int s = 0; s < layout.slots(); ++s) {
        if (std::find(slots.begin(), slots.end(), s) == slots.end()) rest.push_back(s);
    }
    return rest;
}

void check_slots(const HilbertLayout& layout, const std::vector<int>& slots,
                 const char* what) {
    for (int s : slots) {
        if (s < 0 || s >= layout.slots())
            throw DomainError(std::string(what) + ": slot index out of range");
    }
    std::vector<int> sorted = slots;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw DomainError(std::string(what) + ": duplicate slot index");
}

}  // namespace

HilbertLayout::HilbertLayout(std::vector<int> dims, std::vector<SlotRole> roles)
    : dims_(std::move(dims)), roles_(std::move(roles)) {
    if (dims_.empty() || dims_.size() != roles_.size())
        throw InvalidDimensionError("layout: dims and roles must be non-empty and equal length");
    bool seen_qutrit = false;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (dims_[i] < 2) throw InvalidDimensionError("layout: every dim must be >= 2");
        if (roles_[i] == SlotRole::Qutrit && dims_[i] != 3)
            throw InvalidDimensionError("layout: qutrit slots must have dim 3");
        if (roles_[i] == SlotRole::Qutrit) seen_qutrit = true;
        if (roles_[i] == SlotRole::Mode && seen_qutrit)
            throw InvalidDimensionError("layout: mode slots must precede qutrit slots");
    }
    strides_.assign(dims_.size(), 1);
    for (int s = static_cast<int>(dims_.size()) - 2; s >= 0; --s) {
        strides_[static_cast<std::size_t>(s)] =
            strides_[static_cast<std::size_t>(s) + 1] * dims_[static_cast<std::size_t>(s) + 1];
    }
    total_ = strides_[0] * dims_[0];
}

HilbertLayout HilbertLayout::modes_and_qutrits(const std::vector<int>& mode_cutoffs,
                                               int n_qutrits) {
    std::vector<int> dims;
    std::vector<SlotRole> roles;
    for (int c : mode_cutoffs) {
        dims.push_back(c);
        roles.push_back(SlotRole::Mode);
    }
    for (int i = 0; i < n_qutrits; ++i) {
        dims.push_back(3);
        roles.push_back(SlotRole::Qutrit);
    }
    return {std::move(dims), std::move(roles)};
}

HilbertLayout HilbertLayout::single_qutrit() {
    return {{3}, {SlotRole::Qutrit}};
}

HilbertLayout HilbertLayout::single_mode(int cutoff) {
    return {{cutoff}, {SlotRole::Mode}};
}

int HilbertLayout::charger_dim() const {
    int d = 1;
    for (int s = 0; s < slots(); ++s)
        if (role(s) == SlotRole::Mode) d *= dim(s);
    return d;
}

int HilbertLayout::battery_dim() const {
    int d = 1;
    for (int s = 0; s < slots(); ++s)
        if (role(s) == SlotRole::Qutrit) d *= dim(s);
    return d;
}

int HilbertLayout::n_modes() const {
    return static_cast<int>(std::count(roles_.begin(), roles_.end(), SlotRole::Mode));
}

int HilbertLayout::n_qutrits() const {
    return static_cast<int>(std::count(roles_.begin(), roles_.end(), SlotRole::Qutrit));
}

std::vector<int> HilbertLayout::mode_slots() const {
    std::vector<int> out;
    for (int s = 0; s < slots(); ++s)
        if (role(s) == SlotRole::Mode) out.push_back(s);
    return out;
}

std::vector<int> HilbertLayout::qutrit_slots() const {
    std::vector<int> out;
    for (int s = 0; s < slots(); ++s)
        if (role(s) == SlotRole::Qutrit) out.push_back(s);
    return out;
}

int HilbertLayout::flatten(std::span<const int> idx) const {
    if (static_cast<int>(idx.size()) != slots())
        throw InvalidDimensionError("flatten: index rank mismatch");
    int flat = 0;
    for (int s = 0; s < slots(); ++s) {
        const int i = idx[static_cast<std::size_t>(s)];
        if (i < 0 || i >= dim(s)) throw DomainError("flatten: index out of range");
        flat += i * stride(s);
    }
    return flat;
}

void HilbertLayout::unflatten(int flat, std::span<int> idx) const {
    if (static_cast<int>(idx.size()) != slots())
        throw InvalidDimensionError("unflatten: index rank mismatch");
    if (flat < 0 || flat >= total_) throw DomainError("unflatten: index out of range");
    for (int s = 0; s < slots(); ++s) {
        idx[static_cast<std::size_t>(s)] = (flat / stride(s)) % dim(s);
    }
}

DenseOperator::DenseOperator(HilbertLayout layout)
    : layout_(std::move(layout)), data_(sq(layout_.total_dim()), cdouble(0.0, 0.0)) {}

DenseOperator::DenseOperator(HilbertLayout layout, std::vector<cdouble> data)
    : layout_(std::move(layout)), data_(std::move(data)) {
    if (data_.size() != sq(layout_.total_dim()))
        throw InvalidDimensionError("operator: data size does not match layout");
}

void DenseOperator::set_zero() {
    std::fill(data_.begin(), data_.end(), cdouble(0.0, 0.0));
}

DenseOperator DenseOperator::dagger() const {
    DenseOperator out(layout_);
    const int d = dim();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out(j, i) = std::conj((*this)(i, j));
    return out;
}

cdouble DenseOperator::trace() const {
    return kernels::active_kernels().trace(static_cast<std::size_t>(dim()), data(),
                                           static_cast<std::size_t>(dim()));
}

bool DenseOperator::is_hermitian(double tol) const {
    const int d = dim();
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > tol) return false;
        }
    }
    return true;
}

double DenseOperator::max_abs() const {
    const auto n = static_cast<std::size_t>(dim());
    return kernels::active_kernels().max_abs_diff(n, n, data(), n, nullptr, 0);
}

DenseOperator& DenseOperator::operator+=(const DenseOperator& rhs) {
    if (!(layout_ == rhs.layout_)) throw InvalidDimensionError("operator+=: layout mismatch");
    kernels::active_kernels().axpy(data_.size(), cdouble(1.0, 0.0), rhs.data(), data());
    return *this;
}

DenseOperator& DenseOperator::operator-=(const DenseOperator& rhs) {
    if (!(layout_ == rhs.layout_)) throw InvalidDimensionError("operator-=: layout mismatch");
    kernels::active_kernels().axpy(data_.size(), cdouble(-1.0, 0.0), rhs.data(), data());
    return *this;
}

DenseOperator& DenseOperator::operator*=(cdouble scalar) {
    for (auto& z : data_) z *= scalar;
    return *this;
}

DenseOperator operator+(DenseOperator lhs, const DenseOperator& rhs) {
    lhs += rhs;
    return lhs;
}

DenseOperator operator-(DenseOperator lhs, const DenseOperator& rhs) {
    lhs -= rhs;
    return lhs;
}

DenseOperator operator*(cdouble scalar, DenseOperator op) {
    op *= scalar;
    return op;
}

DenseOperator operator*(const DenseOperator& lhs, const DenseOperator& rhs) {
    if (!(lhs.layout() == rhs.layout()))
        throw InvalidDimensionError("operator*: layout mismatch");
    DenseOperator out(lhs.layout());
    const auto d = static_cast<std::size_t>(lhs.dim());
    kernels::active_kernels().gemm_acc(d, d, d, cdouble(1.0, 0.0), lhs.data(), d,
                                       rhs.data(), d, out.data(), d);
    return out;
}

double max_abs_diff(const DenseOperator& a, const DenseOperator& b) {
    if (!(a.layout() == b.layout()))
        throw InvalidDimensionError("max_abs_diff: layout mismatch");
    const auto n = static_cast<std::size_t>(a.dim());
    return kernels::active_kernels().max_abs_diff(n, n, a.data(), n, b.data(), n);
}

DensityState::DensityState(DenseOperator op, double trace_herm_tol, double positivity_tol)
    : op_(std::move(op)), trace_herm_tol_(trace_herm_tol), positivity_tol_(positivity_tol) {
    validate();
}

DensityState::DensityState(UncheckedTag, DenseOperator op, double tht, double pt)
    : op_(std::move(op)), trace_herm_tol_(tht), positivity_tol_(pt) {}

DensityState DensityState::unchecked(DenseOperator op, double trace_herm_tol,
                                     double positivity_tol) {
    return {UncheckedTag{}, std::move(op), trace_herm_tol, positivity_tol};
}

DensityState DensityState::basis_state(const HilbertLayout& layout, int flat_index) {
    if (flat_index < 0 || flat_index >= layout.total_dim())
        throw DomainError("basis_state: index out of range");
    DenseOperator op(layout);
    op(flat_index, flat_index) = 1.0;
    return unchecked(std::move(op));
}

void DensityState::validate() const {
    if (std::abs(op_.trace() - cdouble(1.0, 0.0)) > trace_herm_tol_)
        throw NumericalCorruptionError("density matrix trace deviates from 1");
    if (!op_.is_hermitian(trace_herm_tol_))
        throw NumericalCorruptionError("density matrix is not Hermitian within tolerance");
    if (min_eigenvalue(op_) < -positivity_tol_)
        throw NumericalCorruptionError("density matrix has a negative eigenvalue beyond tolerance");
}

DenseOperator qutrit_lowering() {
    DenseOperator op(HilbertLayout::single_qutrit());
    op(0, 1) = 1.0;
    op(1, 2) = std::sqrt(2.0);
    return op;
}

DenseOperator qutrit_sz(double w0, double w1, double w2) {
    DenseOperator op(HilbertLayout::single_qutrit());
    op(0, 0) = w0;
    op(1, 1) = w1;
    op(2, 2) = w2;
    return op;
}

DenseOperator boson_annihilation(int cutoff) {
    if (cutoff < 2) throw InvalidDimensionError("boson_annihilation: cutoff must be >= 2");
    DenseOperator op(HilbertLayout::single_mode(cutoff));
    for (int n = 1; n < cutoff; ++n) op(n - 1, n) = std::sqrt(static_cast<double>(n));
    return op;
}

DenseOperator identity_operator(const HilbertLayout& layout) {
    DenseOperator op(layout);
    for (int i = 0; i < layout.total_dim(); ++i) op(i, i) = 1.0;
    return op;
}

DenseOperator level_projector(int m, int n) {
    if (m < 0 || m > 2 || n < 0 || n > 2)
        throw DomainError("level_projector: levels must be in {0,1,2}");
    DenseOperator op(HilbertLayout::single_qutrit());
    op(m, n) = 1.0;
    return op;
}

DenseOperator embed(const DenseOperator& op, int slot, const HilbertLayout& layout) {
    if (slot < 0 || slot >= layout.slots())
        throw DomainError("embed: slot index out of range");
    const int d = layout.dim(slot);
    if (op.dim() != d)
        throw InvalidDimensionError("embed: operator dimension does not match slot");
    DenseOperator out(layout);
    const int stride = layout.stride(slot);
    int left = 1;
    for (int s = 0; s < slot; ++s) left *= layout.dim(s);
    const int right = stride;
    const int block = d * right;
    for (int l = 0; l < left; ++l) {
        const int base = l * block;
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                const cdouble v = op(i, j);
                if (v == cdouble(0.0, 0.0)) continue;
                for (int r = 0; r < right; ++r) {
                    out(base + i * stride + r, base + j * stride + r) = v;
                }
            }
        }
    }
    return out;
}

DenseOperator collective_transition(int m, int n, const HilbertLayout& layout) {
    if (m < 0 || m > 2 || n < 0 || n > 2)
        throw DomainError("collective_transition: levels must be in {0,1,2}");
    const auto qs = layout.qutrit_slots();
    if (qs.empty())
        throw DomainError("collective_transition: layout has no qutrit slots");
    DenseOperator out(layout);
    const DenseOperator sigma = level_projector(m, n);
    for (int s : qs) out += embed(sigma, s, layout);
    return out;
}

cdouble expectation(const DensityState& state, const DenseOperator& obs) {
    if (!(state.op().layout() == obs.layout()))
        throw InvalidDimensionError("expectation: layout mismatch");
    const int d = obs.dim();
    // Tr(obs * rho) without forming the product
    cdouble sum(0.0, 0.0);
    for (int i = 0; i < d; ++i) {
        for (int k = 0; k < d; ++k) {
            sum += obs(i, k) * state.op()(k, i);
        }
    }
    return sum;
}

DenseOperator reduce_to_slots(const DenseOperator& rho, const std::vector<int>& keep) {
    const HilbertLayout& layout = rho.layout();
    if (keep.empty()) throw DomainError("partial_trace: keep set must be non-empty");
    check_slots(layout, keep, "partial_trace");
    std::vector<int> keep_sorted = keep;
    std::sort(keep_sorted.begin(), keep_sorted.end());
    const std::vector<int> traced = complement_slots(layout, keep_sorted);

    std::vector<int> kept_dims;
    std::vector<SlotRole> kept_roles;
    for (int s : keep_sorted) {
        kept_dims.push_back(layout.dim(s));
        kept_roles.push_back(layout.role(s));
    }
    HilbertLayout reduced_layout(kept_dims, kept_roles);

    const auto keep_off = slot_offsets(layout, keep_sorted);
    const auto tr_off = slot_offsets(layout, traced);
    const int dk = static_cast<int>(keep_off.size());
    const int D = layout.total_dim();

    DenseOperator out(reduced_layout);
    for (int a = 0; a < dk; ++a) {
        for (int b = 0; b < dk; ++b) {
            cdouble sum(0.0, 0.0);
            for (int off : tr_off) {
                sum += rho.data()[static_cast<std::size_t>(keep_off[static_cast<std::size_t>(a)] + off) * D +
                                  keep_off[static_cast<std::size_t>(b)] + off];
            }
            out(a, b) = sum;
        }
    }
    return out;
}

DensityState partial_trace(const DensityState& state, const std::vector<int>& keep) {
    DenseOperator reduced = reduce_to_slots(state.op(), keep);
    return DensityState::unchecked(std::move(reduced), state.trace_herm_tol(),
                                   state.positivity_tol());
}

DenseOperator partial_transpose_op(const DenseOperator& rho,
                                   const std::vector<int>& subsystem) {
    const HilbertLayout& layout = rho.layout();
    check_slots(layout, subsystem, "partial_transpose");
    std::vector<int> sub = subsystem;
    std::sort(sub.begin(), sub.end());
    const std::vector<int> rest = complement_slots(layout, sub);
    const auto sub_off = slot_offsets(layout, sub);
    const auto rest_off = slot_offsets(layout, rest);
    const int D = layout.total_dim();

    DenseOperator out(layout);
    const int ns = static_cast<int>(sub_off.size());
    const int nr = static_cast<int>(rest_off.size());
    for (int a = 0; a < ns; ++a) {
        for (int b = 0; b < ns; ++b) {
            for (int p = 0; p < nr; ++p) {
                const std::size_t row_out =
                    static_cast<std::size_t>(sub_off[static_cast<std::size_t>(a)] +
                                             rest_off[static_cast<std::size_t>(p)]);
                for (int q = 0; q < nr; ++q) {
                    const std::size_t col_out =
                        static_cast<std::size_t>(sub_off[static_cast<std::size_t>(b)] +
                                                 rest_off[static_cast<std::size_t>(q)]);
                    const std::size_t row_in =
                        static_cast<std::size_t>(sub_off[static_cast<std::size_t>(b)] +
                                                 rest_off[static_cast<std::size_t>(p)]);
                    const std::size_t col_in =
                        static_cast<std::size_t>(sub_off[static_cast<std::size_t>(a)] +
                                                 rest_off[static_cast<std::size_t>(q)]);
                    out.data()[row_out * D + col_out] = rho.data()[row_in * D + col_in];
                }
            }
        }
    }
    return out;
}

DenseOperator partial_transpose(const DensityState& state,
                                const std::vector<int>& subsystem) {
    return partial_transpose_op(state.op(), subsystem);
}

double trace_norm(const DenseOperator& op, double herm_tol) {
    if (!op.is_hermitian(herm_tol))
        throw DomainError("trace_norm: operator is not Hermitian within tolerance");
    double sum = 0.0;
    for (double ev : hermitian_eigenvalues(op)) sum += std::abs(ev);
    return sum;
}

std::vector<double> hermitian_eigenvalues(const DenseOperator& op) {
    const int d = op.dim();
    std::vector<cdouble> work(op.data(), op.data() + sq(d));
    std::vector<double> evals(static_cast<std::size_t>(d));
    // Row-major Hermitian buffer read as column-major is the transpose =
    // conjugate; the spectrum is unchanged.
    const int info = LAPACKE_zheev(LAPACK_COL_MAJOR, 'N', 'U', d,
                                   reinterpret_cast<lapack_complex_double*>(work.data()), d,
                                   evals.data());
    if (info != 0)
        throw NumericalCorruptionError("zheev failed to converge");
    return evals;
}

double min_eigenvalue(const DenseOperator& op) {
    const auto evals = hermitian_eigenvalues(op);
    return evals.front();
}

}  // namespace qbatt
