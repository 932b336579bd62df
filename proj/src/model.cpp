#include "qbatt/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qbatt {

namespace {

constexpr cdouble kImag(0.0, 1.0);

}  // namespace

void ModelParams::validate() const {
    if (n_qutrits < 1) throw DomainError("model: N must be >= 1");
    if (n_modes < 1 || n_modes > 2) throw DomainError("model: modes must be 1 or 2");
    if (static_cast<int>(omega_r.size()) != n_modes)
        throw InvalidDimensionError("model: omega_r size must equal mode count");
    if (static_cast<int>(g.size()) != n_modes)
        throw InvalidDimensionError("model: g size must equal mode count");
    if (static_cast<int>(n_photons.size()) != n_modes)
        throw InvalidDimensionError("model: n_photons size must equal mode count");
    if (static_cast<int>(cutoff.size()) != n_modes)
        throw InvalidDimensionError("model: cutoff size must equal mode count");
    if (kappa < 0 || gamma_rel[0] < 0 || gamma_rel[1] < 0 || gamma_dep[0] < 0 ||
        gamma_dep[1] < 0)
        throw DomainError("model: rates must be non-negative");
    if (!(omega_levels[0] <= omega_levels[1] && omega_levels[1] <= omega_levels[2]))
        throw DomainError("model: level frequencies must satisfy w0 <= w1 <= w2");
    for (int k = 0; k < n_modes; ++k) {
        if (n_photons[static_cast<std::size_t>(k)] < 0)
            throw DomainError("model: n_photons must be non-negative");
        if (cutoff[static_cast<std::size_t>(k)] < n_photons[static_cast<std::size_t>(k)] + 1)
            throw TruncationError("model: cutoff must be at least n_photons + 1");
        if (cutoff[static_cast<std::size_t>(k)] < 2)
            throw InvalidDimensionError("model: cutoff must be >= 2");
    }
}

HilbertLayout ModelParams::layout() const {
    return HilbertLayout::modes_and_qutrits(cutoff, n_qutrits);
}

HilbertLayout ModelParams::battery_layout() const {
    return HilbertLayout::modes_and_qutrits({}, n_qutrits);
}

void CircuitParams::validate() const {
    if (E_C <= 0 || E_J <= 0 || C_0 <= 0 || C_c <= 0 || C_r <= 0 || L_r <= 0 ||
        e_charge <= 0)
        throw DomainError("circuit: parameters must be strictly positive");
    if (C < 0) throw DomainError("circuit: C must be non-negative");
    if (N < 1) throw DomainError("circuit: N must be >= 1");
}

CircuitDerived map_circuit_parameters(const CircuitParams& c, int k) {
    c.validate();
    if (k < 1) throw DomainError("circuit: mode index k must be >= 1");
    CircuitDerived out{};
    out.omega_q = std::sqrt(16.0 * c.E_C * c.E_J);
    const double beta = c.C / (c.C_0 + c.C);
    out.J = out.omega_q * beta / 2.0;
    const double load = c.C_r + c.N * c.C_c;
    out.omega_rk = k * std::numbers::pi / std::sqrt(c.L_r * load);
    out.g_k = std::sqrt(out.omega_q * out.omega_rk * c.E_C * c.C_c * c.C_c /
                        (c.e_charge * c.e_charge * load));
    return out;
}

void DriveParams::validate() const {
    if (Omega0 <= 0) throw DomainError("drive: Omega0 must be positive");
    if (tau <= 0) throw DomainError("drive: tau must be positive");
    if (!(omega_levels[0] <= omega_levels[1] && omega_levels[1] <= omega_levels[2]))
        throw DomainError("drive: level frequencies must satisfy w0 <= w1 <= w2");
}

DenseOperator build_battery_hamiltonian(const ModelParams& p, const HilbertLayout& layout) {
    p.validate();
    if (layout.n_qutrits() != p.n_qutrits)
        throw InvalidDimensionError("battery hamiltonian: layout qutrit count mismatch");
    const auto qs = layout.qutrit_slots();
    DenseOperator h(layout);
    const DenseOperator sz =
        qutrit_sz(p.omega_levels[0], p.omega_levels[1], p.omega_levels[2]);
    for (int s : qs) h += embed(sz, s, layout);
    if (p.J != 0.0 && p.n_qutrits > 1) {
        // V = S- - S+ is anti-Hermitian, so -J V_i V_{i+1} is Hermitian.
        const DenseOperator v = qutrit_lowering() - qutrit_lowering().dagger();
        for (std::size_t i = 0; i + 1 < qs.size(); ++i) {
            h += cdouble(-p.J, 0.0) *
                 (embed(v, qs[i], layout) * embed(v, qs[i + 1], layout));
        }
    }
    return h;
}

DenseOperator build_charging_hamiltonian(const ModelParams& p, const HilbertLayout& layout) {
    p.validate();
    if (layout.n_qutrits() != p.n_qutrits || layout.n_modes() != p.n_modes)
        throw InvalidDimensionError("charging hamiltonian: layout mismatch");
    const auto ms = layout.mode_slots();
    for (int k = 0; k < p.n_modes; ++k) {
        if (layout.dim(ms[static_cast<std::size_t>(k)]) != p.cutoff[static_cast<std::size_t>(k)])
            throw InvalidDimensionError("charging hamiltonian: cutoff mismatch");
    }

    DenseOperator h = build_battery_hamiltonian(p, layout);
    DenseOperator v_sum(layout);
    const DenseOperator v = qutrit_lowering() - qutrit_lowering().dagger();
    for (int s : layout.qutrit_slots()) v_sum += embed(v, s, layout);

    for (int k = 0; k < p.n_modes; ++k) {
        const int slot = ms[static_cast<std::size_t>(k)];
        const DenseOperator a = boson_annihilation(p.cutoff[static_cast<std::size_t>(k)]);
        const DenseOperator a_full = embed(a, slot, layout);
        const DenseOperator x_full = embed(a + a.dagger(), slot, layout);
        h += cdouble(p.omega_r[static_cast<std::size_t>(k)], 0.0) *
             (a_full.dagger() * a_full);
        h += (kImag * cdouble(p.g[static_cast<std::size_t>(k)], 0.0)) * (x_full * v_sum);
    }
    return h;
}

DenseOperator build_drive_hamiltonian(double t, const DriveParams& d) {
    d.validate();
    if (t < 0) throw DomainError("drive hamiltonian: t must be >= 0");
    const double f = std::min(t / d.tau, 1.0);
    const double omega01 = d.omega_levels[1] - d.omega_levels[0];
    const double omega12 = d.omega_levels[2] - d.omega_levels[1];
    const cdouble r01 = d.Omega0 * f * std::exp(-kImag * cdouble(omega01 * t, 0.0));
    const cdouble r12 = d.Omega0 * (1.0 - f) * std::exp(-kImag * cdouble(omega12 * t, 0.0));

    DenseOperator h(HilbertLayout::single_qutrit());
    h(0, 0) = d.omega_levels[0];
    h(1, 1) = d.omega_levels[1];
    h(2, 2) = d.omega_levels[2];
    h(0, 1) = r01;
    h(1, 0) = std::conj(r01);
    h(1, 2) = r12;
    h(2, 1) = std::conj(r12);
    return h;
}

DensityState initial_charging_state(const ModelParams& p, const HilbertLayout& layout) {
    p.validate();
    if (!(layout == p.layout()))
        throw InvalidDimensionError("initial state: layout mismatch");
    std::vector<int> idx(static_cast<std::size_t>(layout.slots()), 0);
    const auto ms = layout.mode_slots();
    for (int k = 0; k < p.n_modes; ++k) {
        const int n = p.n_photons[static_cast<std::size_t>(k)];
        if (n >= p.cutoff[static_cast<std::size_t>(k)])
            throw TruncationError("initial state: n_photons does not fit in cutoff");
        idx[static_cast<std::size_t>(ms[static_cast<std::size_t>(k)])] = n;
    }
    return DensityState::basis_state(layout, layout.flatten(idx));
}

}  // namespace qbatt
