#pragma once

#include <complex>
#include <span>
#include <vector>

#include "qbatt/errors.hpp"

namespace qbatt {

using cdouble = std::complex<double>;

enum class SlotRole { Mode, Qutrit };

// Ordered subsystem dimensions of the composite space. Convention: bosonic
// mode slots first, then qutrit slots (site 1..N); composite indices flatten
// row-major over this ordering.
class HilbertLayout {
public:
    HilbertLayout() = default;
    HilbertLayout(std::vector<int> dims, std::vector<SlotRole> roles);

    static HilbertLayout modes_and_qutrits(const std::vector<int>& mode_cutoffs,
                                           int n_qutrits);
    static HilbertLayout single_qutrit();
    static HilbertLayout single_mode(int cutoff);

    int slots() const { return static_cast<int>(dims_.size()); }
    int dim(int slot) const { return dims_[static_cast<std::size_t>(slot)]; }
    SlotRole role(int slot) const { return roles_[static_cast<std::size_t>(slot)]; }
    const std::vector<int>& dims() const { return dims_; }

    int total_dim() const { return total_; }
    int charger_dim() const;  // product over mode slots (1 when none)
    int battery_dim() const;  // product over qutrit slots

    int n_modes() const;
    int n_qutrits() const;
    std::vector<int> mode_slots() const;
    std::vector<int> qutrit_slots() const;

    int flatten(std::span<const int> idx) const;
    void unflatten(int flat, std::span<int> idx) const;

    // row-major stride of a slot (product of dims after it)
    int stride(int slot) const { return strides_[static_cast<std::size_t>(slot)]; }

    bool operator==(const HilbertLayout& other) const {
        return dims_ == other.dims_ && roles_ == other.roles_;
    }

private:
    std::vector<int> dims_;
    std::vector<SlotRole> roles_;
    std::vector<int> strides_;
    int total_ = 1;
};

// Square complex matrix tagged with its layout. Row-major, dense.
class DenseOperator {
public:
    DenseOperator() = default;
    explicit DenseOperator(HilbertLayout layout);  // zero-filled
    DenseOperator(HilbertLayout layout, std::vector<cdouble> data);

    int dim() const { return layout_.total_dim(); }
    const HilbertLayout& layout() const { return layout_; }

    cdouble& operator()(int r, int c) {
        return data_[static_cast<std::size_t>(r) * dim() + c];
    }
    const cdouble& operator()(int r, int c) const {
        return data_[static_cast<std::size_t>(r) * dim() + c];
    }

    cdouble* data() { return data_.data(); }
    const cdouble* data() const { return data_.data(); }

    void set_zero();
    DenseOperator dagger() const;
    cdouble trace() const;
    bool is_hermitian(double tol) const;
    double max_abs() const;

    DenseOperator& operator+=(const DenseOperator& rhs);
    DenseOperator& operator-=(const DenseOperator& rhs);
    DenseOperator& operator*=(cdouble scalar);

private:
    HilbertLayout layout_;
    std::vector<cdouble> data_;
};

DenseOperator operator+(DenseOperator lhs, const DenseOperator& rhs);
DenseOperator operator-(DenseOperator lhs, const DenseOperator& rhs);
DenseOperator operator*(cdouble scalar, DenseOperator op);
DenseOperator operator*(const DenseOperator& lhs, const DenseOperator& rhs);

double max_abs_diff(const DenseOperator& a, const DenseOperator& b);

// Density matrix: Hermitian, unit trace, positive semidefinite within
// tolerance. Construction validates unless the unchecked tag is used
// (integrator internals record violations as diagnostics instead).
class DensityState {
public:
    DensityState(DenseOperator op, double trace_herm_tol = 1e-9,
                 double positivity_tol = 1e-8);

    static DensityState unchecked(DenseOperator op, double trace_herm_tol = 1e-9,
                                  double positivity_tol = 1e-8);

    // pure |index><index| in the computational basis
    static DensityState basis_state(const HilbertLayout& layout, int flat_index);

    const DenseOperator& op() const { return op_; }
    DenseOperator& op() { return op_; }
    double trace_herm_tol() const { return trace_herm_tol_; }
    double positivity_tol() const { return positivity_tol_; }

    void validate() const;  // throws NumericalCorruptionError on breach

private:
    struct UncheckedTag {};
    DensityState(UncheckedTag, DenseOperator op, double tht, double pt);

    DenseOperator op_;
    double trace_herm_tol_;
    double positivity_tol_;
};

// Elementary operators
DenseOperator qutrit_lowering();                                  // |0><1| + sqrt(2)|1><2|
DenseOperator qutrit_sz(double w0, double w1, double w2);         // diag(w0,w1,w2)
DenseOperator boson_annihilation(int cutoff);
DenseOperator identity_operator(const HilbertLayout& layout);
DenseOperator level_projector(int m, int n);                      // 3x3 |m><n|

// Composite-space construction
DenseOperator embed(const DenseOperator& op, int slot, const HilbertLayout& layout);
DenseOperator collective_transition(int m, int n, const HilbertLayout& layout);

// State functionals
cdouble expectation(const DensityState& state, const DenseOperator& obs);
DensityState partial_trace(const DensityState& state, const std::vector<int>& keep);
DenseOperator partial_transpose(const DensityState& state,
                                const std::vector<int>& subsystem);
double trace_norm(const DenseOperator& op, double herm_tol = 1e-9);

// Layout-level workhorses used by the engine on raw operators.
DenseOperator reduce_to_slots(const DenseOperator& rho, const std::vector<int>& keep);
DenseOperator partial_transpose_op(const DenseOperator& rho,
                                   const std::vector<int>& subsystem);

// Ascending eigenvalues of a Hermitian operator (LAPACK zheev behind the
// spec's Hermitian-eigensolver contract).
std::vector<double> hermitian_eigenvalues(const DenseOperator& op);
double min_eigenvalue(const DenseOperator& op);

}  // namespace qbatt
