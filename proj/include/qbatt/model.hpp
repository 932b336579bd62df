#pragma once

#include <array>
#include <vector>

#include "qbatt/tensor.hpp"

namespace qbatt {

// Physical parameters of the resonator-qutrits battery, in units of the
// resonator fundamental (hbar = 1). Defaults put the k=1 mode on resonance
// with the 0-1 transition.
struct ModelParams {
    int n_qutrits = 1;
    int n_modes = 1;
    std::vector<double> omega_r = {1.0};
    std::array<double, 3> omega_levels = {0.0, 1.0, 1.95};
    std::vector<double> g = {1.0};
    double J = 0.0;
    double kappa = 0.0;
    std::array<double, 2> gamma_rel = {0.0, 0.0};  // {G01, G12}
    std::array<double, 2> gamma_dep = {0.0, 0.0};  // {G11, G22}
    std::vector<int> n_photons = {2};
    std::vector<int> cutoff = {6};
    bool local_dissipation = false;  // per-site jump operators instead of collective

    void validate() const;  // throws DomainError / InvalidDimensionError
    HilbertLayout layout() const;
    HilbertLayout battery_layout() const;
};

// Circuit-level inputs; C may be zero (decoupled qutrits), everything else
// must be strictly positive.
struct CircuitParams {
    double E_C = 0.25;
    double E_J = 16.0;
    double C = 1.0;
    double C_0 = 10.0;
    double C_c = 1.0;
    double C_r = 10.0;
    double L_r = 1.0;
    int N = 1;
    double e_charge = 1.0;  // unit constant in dimensionless units

    void validate() const;
};

struct CircuitDerived {
    double omega_q;
    double omega_rk;
    double g_k;
    double J;
};

CircuitDerived map_circuit_parameters(const CircuitParams& c, int k);

// Two-field ramp drive for the classically driven qutrit. f(t) = t/tau,
// clamped to 1 after the ramp completes.
struct DriveParams {
    double Omega0 = 0.25;
    double tau = 160.0;
    std::array<double, 3> omega_levels = {0.0, 1.0, 1.95};

    void validate() const;
};

// Battery Hamiltonian: on-site level energies plus nearest-neighbour
// (S- - S+)(S- - S+) exchange with weight -J; identity on mode slots.
DenseOperator build_battery_hamiltonian(const ModelParams& p, const HilbertLayout& layout);

// Full charging Hamiltonian: mode energies, battery term, and the
// i*g_k (a_k + a_k^dag) sum_i (S_i^- - S_i^+) coupling for each mode.
DenseOperator build_charging_hamiltonian(const ModelParams& p, const HilbertLayout& layout);

// Lab-frame driven-qutrit Hamiltonian at time t (3x3).
DenseOperator build_drive_hamiltonian(double t, const DriveParams& d);

// |0...0> qutrits, Fock n_photons[k] in each mode.
DensityState initial_charging_state(const ModelParams& p, const HilbertLayout& layout);

}  // namespace qbatt
