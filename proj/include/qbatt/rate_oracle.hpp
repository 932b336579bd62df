#pragma once

#include <array>

#include "qbatt/errors.hpp"

namespace qbatt {

// Closed-form single-qutrit relaxation cascade starting from the second
// excited state. Serves as the independent oracle for the numerical engine.
struct RateParams {
    double gamma01 = 0.1;
    double gamma12 = 0.2;
    std::array<double, 3> omega_levels = {0.0, 1.0, 1.95};

    double omega01() const { return omega_levels[1] - omega_levels[0]; }
    double omega12() const { return omega_levels[2] - omega_levels[1]; }
    double omega02() const { return omega_levels[2] - omega_levels[0]; }

    void validate() const;
};

struct LevelPopulations {
    double ground;   // rho_11
    double first;    // rho_22
    double second;   // rho_33
};

// Populations at time t. The generic two-rate branch switches to the
// degenerate-limit formulas when |G01 - G12| < 1e-10 * max(G01, G12).
LevelPopulations analytic_populations(double t, const RateParams& p);

// Closed-form battery energy at time t.
double analytic_energy(double t, const RateParams& p);

}  // namespace qbatt
