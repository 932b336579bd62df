#include <doctest.h>

#include <cmath>
#include <complex>

#include "qbatt/lindblad.hpp"
#include "qbatt/model.hpp"

using namespace qbatt;

namespace {

ModelParams single_cell() {
    ModelParams p;
    p.n_qutrits = 1;
    p.n_modes = 1;
    p.omega_r = {1.0};
    p.g = {1.0};
    p.J = 0.0;
    p.n_photons = {2};
    p.cutoff = {6};
    return p;
}

}  // namespace

TEST_CASE("battery hamiltonian: N=1, J=0 is the bare level diagonal") {
    ModelParams p = single_cell();
    const auto battery = p.battery_layout();
    const DenseOperator h = build_battery_hamiltonian(p, battery);
    CHECK(h(0, 0).real() == doctest::Approx(0.0));
    CHECK(h(1, 1).real() == doctest::Approx(1.0));
    CHECK(h(2, 2).real() == doctest::Approx(1.95));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) CHECK(std::abs(h(i, j)) == 0.0);
}

TEST_CASE("battery hamiltonian: interaction matrix elements") {
    ModelParams p;
    p.n_qutrits = 2;
    p.n_modes = 1;
    p.J = 1.0;
    p.n_photons = {2};
    p.cutoff = {6};
    const auto battery = p.battery_layout();
    const DenseOperator h = build_battery_hamiltonian(p, battery);

    CHECK(h.is_hermitian(1e-12));
    // expanding -J (S- - S+)(S- - S+) on |00>: only the S+S+ part survives,
    // giving -J |11>; so <11|H|00> = -J
    const int idx00 = 0, idx11 = 4;
    CHECK(h(idx11, idx00).real() == doctest::Approx(-1.0));
    CHECK(h(idx11, idx00).imag() == doctest::Approx(0.0));
    // |00> is therefore not an eigenvector
    double off_column = 0;
    for (int r = 1; r < 9; ++r) off_column += std::abs(h(r, idx00));
    CHECK(off_column > 0.5);
}

TEST_CASE("charging hamiltonian: hermiticity and decoupled block structure") {
    ModelParams p = single_cell();
    p.g = {0.0};
    const auto layout = p.layout();
    const DenseOperator h = build_charging_hamiltonian(p, layout);
    CHECK(h.is_hermitian(1e-12));

    // g = 0, J = 0: expectation in |n_r> x |G> is n_r * omega_r
    const DensityState init = initial_charging_state(p, layout);
    CHECK(expectation(init, h).real() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("charging hamiltonian: coupling matrix element is -i g") {
    ModelParams p = single_cell();
    p.n_photons = {1};
    p.cutoff = {2};
    const auto layout = p.layout();
    const DenseOperator h = build_charging_hamiltonian(p, layout);
    CHECK(h.is_hermitian(1e-12));
    // row (n=0, q=1) = 1, column (n=1, q=0) = 3: i g a (x) (-S+) gives -i
    CHECK(h(1, 3).real() == doctest::Approx(0.0));
    CHECK(h(1, 3).imag() == doctest::Approx(-1.0));
}

TEST_CASE("charging hamiltonian: hermitian for two modes and general params") {
    ModelParams p;
    p.n_qutrits = 2;
    p.n_modes = 2;
    p.omega_r = {1.0, 2.0};
    p.g = {0.7, 0.9};
    p.J = 0.8;
    p.n_photons = {2, 2};
    p.cutoff = {4, 4};
    const DenseOperator h = build_charging_hamiltonian(p, p.layout());
    CHECK(h.is_hermitian(1e-12));
}

TEST_CASE("drive hamiltonian ramp") {
    DriveParams d;
    d.Omega0 = 0.25;
    d.tau = 160.0;

    const DenseOperator h0 = build_drive_hamiltonian(0.0, d);
    CHECK(std::abs(h0(0, 1)) == 0.0);                       // f(0) = 0
    CHECK(std::abs(h0(1, 2)) == doctest::Approx(0.25));     // full 1-2 field

    const DenseOperator htau = build_drive_hamiltonian(d.tau, d);
    CHECK(std::abs(htau(0, 1)) == doctest::Approx(0.25));   // f(tau) = 1
    CHECK(std::abs(htau(1, 2)) == doctest::Approx(0.0));

    // clamped after the ramp
    const DenseOperator hlate = build_drive_hamiltonian(2.0 * d.tau, d);
    CHECK(std::abs(hlate(0, 1)) == doctest::Approx(0.25));
    CHECK(std::abs(hlate(1, 2)) == doctest::Approx(0.0));

    for (double t : {0.0, 3.7, 80.0, 159.0, 200.0}) {
        CHECK(build_drive_hamiltonian(t, d).is_hermitian(1e-12));
    }
    CHECK_THROWS_AS(build_drive_hamiltonian(-1.0, d), DomainError);
}

TEST_CASE("circuit parameter mapping") {
    CircuitParams c;
    c.E_C = 0.25;
    c.E_J = 16.0;
    const auto derived = map_circuit_parameters(c, 1);
    CHECK(derived.omega_q == doctest::Approx(8.0));  // sqrt(16 * 0.25 * 16)

    // C = 0 decouples the qutrits
    CircuitParams c0 = c;
    c0.C = 0.0;
    CHECK(map_circuit_parameters(c0, 1).J == doctest::Approx(0.0));

    // omega_rk linear in k; g_k scales as sqrt(omega_rk)
    const auto k1 = map_circuit_parameters(c, 1);
    const auto k2 = map_circuit_parameters(c, 2);
    CHECK(k2.omega_rk == doctest::Approx(2.0 * k1.omega_rk).epsilon(1e-12));
    CHECK(k2.g_k / k1.g_k == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    CircuitParams bad = c;
    bad.E_J = 0.0;
    CHECK_THROWS_AS(map_circuit_parameters(bad, 1), DomainError);
    CHECK_THROWS_AS(map_circuit_parameters(c, 0), DomainError);
}

TEST_CASE("initial charging state") {
    ModelParams p = single_cell();
    const auto layout = p.layout();
    const DensityState init = initial_charging_state(p, layout);

    // one-hot at composite index (n = 2, q = 0) -> flat 2 * 3 + 0
    for (int i = 0; i < layout.total_dim(); ++i) {
        for (int j = 0; j < layout.total_dim(); ++j) {
            const double expect = (i == 6 && j == 6) ? 1.0 : 0.0;
            CHECK(std::abs(init.op()(i, j) - cdouble(expect, 0)) == 0.0);
        }
    }
    CHECK(init.op().trace().real() == doctest::Approx(1.0));

    // battery starts at zero energy
    const DenseOperator h_q = build_battery_hamiltonian(p, p.battery_layout());
    const DensityState reduced = partial_trace(init, {1});
    CHECK(expectation(reduced, h_q).real() == doctest::Approx(0.0));

    ModelParams bad = p;
    bad.n_photons = {6};
    CHECK_THROWS_AS(bad.validate(), TruncationError);
}

TEST_CASE("stationarity: decoupled charging hamiltonian leaves the start fixed") {
    ModelParams p = single_cell();
    p.g = {0.0};
    const auto layout = p.layout();
    const RhsFn rhs = make_structured_rhs(p, layout, dissipators_from(p));
    IntegratorConfig cfg;
    cfg.t_end = 10.0;
    const DensityState init = initial_charging_state(p, layout);
    const TrajectoryRecord rec = integrate(rhs, init, cfg);
    // fidelity with the one-hot start stays 1 within 1e-9
    const double population = rec.final_state(6, 6).real();
    CHECK(population == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(max_abs_diff(rec.final_state, init.op()) < 1e-9);
}

TEST_CASE("model validation rejects bad parameters") {
    ModelParams p = single_cell();
    p.kappa = -0.1;
    CHECK_THROWS_AS(p.validate(), DomainError);

    p = single_cell();
    p.omega_levels = {0.0, 2.0, 1.0};
    CHECK_THROWS_AS(p.validate(), DomainError);

    p = single_cell();
    p.g = {1.0, 1.0};
    CHECK_THROWS_AS(p.validate(), InvalidDimensionError);
}
