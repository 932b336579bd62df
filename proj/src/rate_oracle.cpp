#include "qbatt/rate_oracle.hpp"

#include <algorithm>
#include <cmath>

namespace qbatt {

namespace {

bool degenerate(const RateParams& p) {
    return std::abs(p.gamma01 - p.gamma12) <= 1e-10 * std::max(p.gamma01, p.gamma12);
}

// (exp((g01-g12) t) - 1) / (g01 - g12), the factor that is singular at equal
// rates; expm1 keeps it accurate through the near-degenerate regime.
double growth_factor(double t, const RateParams& p) {
    const double delta = p.gamma01 - p.gamma12;
    return std::expm1(delta * t) / delta;
}

}  // namespace

void RateParams::validate() const {
    if (gamma01 < 0 || gamma12 < 0) throw DomainError("rate oracle: rates must be >= 0");
    if (!(omega_levels[0] <= omega_levels[1] && omega_levels[1] <= omega_levels[2]))
        throw DomainError("rate oracle: level frequencies must satisfy w0 <= w1 <= w2");
}

LevelPopulations analytic_populations(double t, const RateParams& p) {
    p.validate();
    if (t < 0) throw DomainError("analytic_populations: t must be >= 0");
    LevelPopulations pops{};
    pops.second = std::exp(-p.gamma12 * t);
    if (degenerate(p)) {
        const double g = p.gamma12;
        pops.first = g * t * std::exp(-g * t);
    } else {
        pops.first = p.gamma12 * std::exp(-p.gamma01 * t) * growth_factor(t, p);
    }
    pops.ground = 1.0 - pops.second - pops.first;
    return pops;
}

double analytic_energy(double t, const RateParams& p) {
    p.validate();
    if (t < 0) throw DomainError("analytic_energy: t must be >= 0");
    const double w0 = p.omega_levels[0];
    if (degenerate(p)) {
        const double g = p.gamma12;
        return w0 + std::exp(-g * t) * (p.omega02() + g * t * p.omega01());
    }
    // equal to [e^{-G12 t}(G01 w02 - G12 w12) - e^{-G01 t} G12 w01]/(G01 - G12) + w0,
    // rearranged through expm1 so the near-degenerate cancellation is benign
    return w0 + p.omega02() * std::exp(-p.gamma12 * t) +
           p.omega01() * p.gamma12 * std::exp(-p.gamma01 * t) * growth_factor(t, p);
}

}  // namespace qbatt
