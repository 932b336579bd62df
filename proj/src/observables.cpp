#include "qbatt/observables.hpp"

#include <algorithm>
#include <cmath>

namespace qbatt {

double stored_energy_op(const DenseOperator& rho_full, const DenseOperator& H_q_battery,
                        double e0) {
    const auto qs = rho_full.layout().qutrit_slots();
    DenseOperator rho_bat = qs.size() == static_cast<std::size_t>(rho_full.layout().slots())
                                ? rho_full
                                : reduce_to_slots(rho_full, qs);
    if (!(rho_bat.layout() == H_q_battery.layout()))
        throw InvalidDimensionError("stored_energy: battery layout mismatch");
    cdouble sum(0.0, 0.0);
    const int d = rho_bat.dim();
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) sum += H_q_battery(i, k) * rho_bat(k, i);
    if (std::abs(sum.imag()) > 1e-8)
        throw NumericalCorruptionError("stored_energy: imaginary part beyond tolerance");
    return sum.real() - e0;
}

double stored_energy(const DensityState& rho_full, const DenseOperator& H_q_battery,
                     const std::vector<int>& mode_slots, double e0) {
    for (int s : mode_slots) {
        if (s < 0 || s >= rho_full.op().layout().slots())
            throw DomainError("stored_energy: invalid mode slot");
        if (rho_full.op().layout().role(s) != SlotRole::Mode)
            throw DomainError("stored_energy: slot is not a mode");
    }
    return stored_energy_op(rho_full.op(), H_q_battery, e0);
}

double average_power(double delta_E, double t) {
    if (t < 0) throw DomainError("average_power: t must be >= 0");
    if (t == 0) return 0.0;
    return delta_E / t;
}

MaxPowerResult max_power(const TrajectoryRecord& traj) {
    if (traj.samples.empty())
        throw InsufficientDataError("max_power: empty trajectory");
    MaxPowerResult best{traj.samples.front().power, traj.samples.front().t};
    for (const auto& s : traj.samples) {
        if (s.power > best.value) {
            best.value = s.power;
            best.t = s.t;
        }
    }
    return best;
}

double l1_coherence(const DenseOperator& rho) {
    const int d = rho.dim();
    double sum = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j) sum += std::abs(rho(i, j));
    return sum;
}

double log_negativity_op(const DenseOperator& rho_full,
                         const std::vector<int>& battery_slots) {
    DenseOperator pt = partial_transpose_op(rho_full, battery_slots);
    if (!pt.is_hermitian(1e-8))
        throw NumericalCorruptionError("log_negativity: partial transpose not Hermitian");
    double tn = 0.0;
    for (double ev : hermitian_eigenvalues(pt)) tn += std::abs(ev);
    if (tn <= 1.0 + 1e-12) return 0.0;
    return std::log2(tn);
}

double log_negativity(const DensityState& rho_full,
                      const std::vector<int>& battery_slots) {
    return log_negativity_op(rho_full.op(), battery_slots);
}

}  // namespace qbatt
