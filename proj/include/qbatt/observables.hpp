#pragma once

#include <vector>

#include "qbatt/lindblad.hpp"
#include "qbatt/tensor.hpp"

namespace qbatt {

struct BatteryMetrics {
    double delta_E = 0;   // stored energy (hbar*omega)
    double P_avg = 0;     // average power (hbar*omega^2)
    double P_max = 0;
    double E_s = 0;       // stable energy
    double C = 0;         // l1 coherence
    double S = 0;         // logarithmic negativity (bits)
};

// Tr[H_q Tr_modes(rho)] - e0. Throws NumericalCorruptionError when the trace
// picks up an imaginary part beyond 1e-8; residue below that is discarded.
double stored_energy(const DensityState& rho_full, const DenseOperator& H_q_battery,
                     const std::vector<int>& mode_slots, double e0 = 0.0);
double stored_energy_op(const DenseOperator& rho_full, const DenseOperator& H_q_battery,
                        double e0 = 0.0);

// delta_E / t, with P(0) = 0 by convention.
double average_power(double delta_E, double t);

struct MaxPowerResult {
    double value = 0;
    double t = 0;
};

// Maximum of the sampled power column; ties resolve to the earliest time.
MaxPowerResult max_power(const TrajectoryRecord& traj);

// Sum of |rho_ij|, i != j, in the computational basis.
double l1_coherence(const DenseOperator& rho);

// log2 of the trace norm of the joint state partially transposed on the
// battery slots, clamped to 0 for separable round-off. The reduced-state
// trace norm is identically 1, so the joint-state definition is the one
// with content; see README.
double log_negativity(const DensityState& rho_full, const std::vector<int>& battery_slots);
double log_negativity_op(const DenseOperator& rho_full,
                         const std::vector<int>& battery_slots);

}  // namespace qbatt
