#include <doctest.h>

#include <array>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "qbatt/tensor.hpp"

using namespace qbatt;

namespace {

const double kSqrt2 = std::sqrt(2.0);

DenseOperator random_operator(std::mt19937& rng, const HilbertLayout& layout) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    DenseOperator op(layout);
    for (int i = 0; i < op.dim(); ++i)
        for (int j = 0; j < op.dim(); ++j) op(i, j) = cdouble(dist(rng), dist(rng));
    return op;
}

// rho = M M^dag / tr, a generic full-rank density matrix
DensityState random_state(std::mt19937& rng, const HilbertLayout& layout) {
    const DenseOperator m = random_operator(rng, layout);
    DenseOperator rho = m * m.dagger();
    const double tr = rho.trace().real();
    rho *= cdouble(1.0 / tr, 0.0);
    return DensityState(std::move(rho));
}

DenseOperator kron_pair(const DenseOperator& a, const DenseOperator& b,
                        const HilbertLayout& layout) {
    DenseOperator out(layout);
    const int db = b.dim();
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j)
            for (int k = 0; k < db; ++k)
                for (int l = 0; l < db; ++l)
                    out(i * db + k, j * db + l) = a(i, j) * b(k, l);
    return out;
}

double largest_singular_value(const DenseOperator& op) {
    const auto evals = hermitian_eigenvalues(op.dagger() * op);
    return std::sqrt(std::max(0.0, evals.back()));
}

}  // namespace

TEST_CASE("layout flatten/unflatten round-trips") {
    const std::vector<HilbertLayout> layouts = {
        HilbertLayout::modes_and_qutrits({4}, 2),
        HilbertLayout::modes_and_qutrits({2, 3}, 1),
        HilbertLayout::modes_and_qutrits({}, 3),
        HilbertLayout::modes_and_qutrits({4, 2}, 2),
    };
    for (const auto& layout : layouts) {
        std::vector<int> idx(static_cast<std::size_t>(layout.slots()));
        for (int flat = 0; flat < layout.total_dim(); ++flat) {
            layout.unflatten(flat, idx);
            CHECK(layout.flatten(idx) == flat);
        }
    }
}

TEST_CASE("layout rejects invalid shapes") {
    CHECK_THROWS_AS(HilbertLayout({1}, {SlotRole::Mode}), InvalidDimensionError);
    CHECK_THROWS_AS(HilbertLayout({4}, {SlotRole::Qutrit}), InvalidDimensionError);
    // modes must precede qutrits
    CHECK_THROWS_AS(HilbertLayout({3, 4}, {SlotRole::Qutrit, SlotRole::Mode}),
                    InvalidDimensionError);
}

TEST_CASE("qutrit ladder operators") {
    const DenseOperator s_minus = qutrit_lowering();
    CHECK(s_minus(0, 1) == cdouble(1.0, 0.0));
    CHECK(s_minus(1, 2).real() == doctest::Approx(kSqrt2).epsilon(1e-15));
    CHECK(std::abs(s_minus(0, 0)) == 0.0);
    CHECK(std::abs(s_minus(2, 0)) == 0.0);

    const DenseOperator s_plus = s_minus.dagger();
    CHECK(s_plus(1, 0) == cdouble(1.0, 0.0));
    CHECK(s_plus(2, 1).real() == doctest::Approx(kSqrt2).epsilon(1e-15));

    const DenseOperator cubed = s_minus * s_minus * s_minus;
    CHECK(cubed.max_abs() == 0.0);
}

TEST_CASE("qutrit_sz diagonal and expectations") {
    const DenseOperator sz = qutrit_sz(0.0, 1.0, 1.95);
    CHECK(sz(0, 0) == cdouble(0, 0));
    CHECK(sz(1, 1) == cdouble(1, 0));
    CHECK(sz(2, 2).real() == doctest::Approx(1.95));
    CHECK(qutrit_sz(0, 0, 0).max_abs() == 0.0);

    const auto layout = HilbertLayout::single_qutrit();
    const DensityState excited = DensityState::basis_state(layout, 2);
    CHECK(expectation(excited, sz).real() == doctest::Approx(1.95));

    DenseOperator mixed(layout);
    for (int i = 0; i < 3; ++i) mixed(i, i) = 1.0 / 3.0;
    CHECK(expectation(DensityState(mixed), sz).real() ==
          doctest::Approx(2.95 / 3.0).epsilon(1e-12));
}

TEST_CASE("boson annihilation and truncated ladder algebra") {
    CHECK_THROWS_AS(boson_annihilation(1), InvalidDimensionError);

    const DenseOperator a3 = boson_annihilation(3);
    CHECK(a3(0, 1) == cdouble(1, 0));
    CHECK(a3(1, 2).real() == doctest::Approx(kSqrt2));

    const DenseOperator a4 = boson_annihilation(4);
    const DenseOperator n4 = a4.dagger() * a4;
    for (int i = 0; i < 4; ++i) CHECK(n4(i, i).real() == doctest::Approx(i));

    // a |2> = sqrt(2) |1>
    CHECK(a4(1, 2).real() == doctest::Approx(kSqrt2));

    // [a, a^dag] = I except the last diagonal entry (truncation artifact)
    const DenseOperator comm = a4 * a4.dagger() - a4.dagger() * a4;
    for (int i = 0; i < 3; ++i) CHECK(comm(i, i).real() == doctest::Approx(1.0));
    CHECK(comm(3, 3).real() == doctest::Approx(-3.0));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (i != j) CHECK(std::abs(comm(i, j)) < 1e-15);
}

TEST_CASE("embed places operators with identity elsewhere") {
    const auto layout = HilbertLayout::modes_and_qutrits({2}, 1);  // dims [2,3]

    DenseOperator diag01(HilbertLayout::single_mode(2));
    diag01(1, 1) = 1.0;
    const DenseOperator embedded = embed(diag01, 0, layout);
    // hand Kronecker expansion: diag(0,1) (x) I_3 = diag(0,0,0,1,1,1)
    const std::array<double, 6> expect = {0, 0, 0, 1, 1, 1};
    for (int i = 0; i < 6; ++i) {
        CHECK(embedded(i, i).real() == doctest::Approx(expect[static_cast<std::size_t>(i)]));
        for (int j = 0; j < 6; ++j)
            if (i != j) CHECK(std::abs(embedded(i, j)) == 0.0);
    }

    const DenseOperator id3 = identity_operator(HilbertLayout::single_qutrit());
    CHECK(max_abs_diff(embed(id3, 1, layout), identity_operator(layout)) == 0.0);

    CHECK_THROWS_AS(embed(diag01, 1, layout), InvalidDimensionError);
}

TEST_CASE("embedded operators on disjoint slots commute") {
    std::mt19937 rng(7);
    const auto layout = HilbertLayout::modes_and_qutrits({}, 2);
    const auto single = HilbertLayout::single_qutrit();
    const DenseOperator sigma = random_operator(rng, single);
    const DenseOperator tau = random_operator(rng, single);
    const DenseOperator left = embed(sigma, 0, layout) * embed(tau, 1, layout);
    const DenseOperator right = embed(tau, 1, layout) * embed(sigma, 0, layout);
    CHECK(max_abs_diff(left, right) < 1e-14);
}

TEST_CASE("embed preserves the operator norm") {
    std::mt19937 rng(11);
    const auto layout = HilbertLayout::modes_and_qutrits({3}, 2);
    const auto single = HilbertLayout::single_qutrit();
    for (int round = 0; round < 5; ++round) {
        const DenseOperator op = random_operator(rng, single);
        const double before = largest_singular_value(op);
        const double after = largest_singular_value(embed(op, 2, layout));
        CHECK(after == doctest::Approx(before).epsilon(1e-10));
    }
}

TEST_CASE("collective transitions") {
    const auto one = HilbertLayout::modes_and_qutrits({}, 1);
    CHECK(max_abs_diff(collective_transition(0, 1, one),
                       embed(level_projector(0, 1), 0, one)) == 0.0);

    // explicit 9x9 construction: S01 = sigma01 (x) I + I (x) sigma01
    const auto two = HilbertLayout::modes_and_qutrits({}, 2);
    const DenseOperator s01 = collective_transition(0, 1, two);
    const DenseOperator manual =
        embed(level_projector(0, 1), 0, two) + embed(level_projector(0, 1), 1, two);
    CHECK(max_abs_diff(s01, manual) == 0.0);
    // rank from the spectrum of S01^dag S01 (explicit-construction oracle)
    int rank = 0;
    for (double ev : hermitian_eigenvalues(s01.dagger() * s01))
        if (ev > 1e-12) ++rank;
    CHECK(rank == 4);

    const DenseOperator s11 = collective_transition(1, 1, two);
    CHECK(s11.is_hermitian(1e-15));
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j)
            if (i != j) CHECK(std::abs(s11(i, j)) == 0.0);

    // adjoint pairing
    CHECK(max_abs_diff(collective_transition(1, 0, two), s01.dagger()) == 0.0);

    CHECK_THROWS_AS(collective_transition(0, 3, two), DomainError);
    CHECK_THROWS_AS(collective_transition(0, 1, HilbertLayout::single_mode(4)), DomainError);
}

TEST_CASE("expectation basics") {
    const auto layout = HilbertLayout::single_qutrit();
    std::mt19937 rng(3);
    const DensityState rho = random_state(rng, layout);
    CHECK(expectation(rho, identity_operator(layout)).real() == doctest::Approx(1.0));

    const auto other = HilbertLayout::modes_and_qutrits({}, 2);
    CHECK_THROWS_AS(expectation(rho, identity_operator(other)), InvalidDimensionError);
}

TEST_CASE("partial trace recovers tensor factors") {
    std::mt19937 rng(13);
    const auto layout_a = HilbertLayout::single_mode(3);
    const auto layout_b = HilbertLayout::modes_and_qutrits({}, 1);
    const auto joint = HilbertLayout::modes_and_qutrits({3}, 1);

    for (int round = 0; round < 6; ++round) {
        const DensityState rho_a = random_state(rng, layout_a);
        const DensityState rho_b = random_state(rng, layout_b);
        const DenseOperator product = kron_pair(rho_a.op(), rho_b.op(), joint);
        const DensityState joint_state = DensityState::unchecked(product);

        const DensityState back_a = partial_trace(joint_state, {0});
        CHECK(max_abs_diff(back_a.op(), rho_a.op()) < 1e-12);
        const DensityState back_b = partial_trace(joint_state, {1});
        CHECK(max_abs_diff(back_b.op(), rho_b.op()) < 1e-12);
        // trace preserved
        CHECK(back_a.op().trace().real() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("partial trace of an entangled pure state is maximally mixed") {
    // (|00> + |11> + |22>)/sqrt(3) over two qutrits
    const auto two = HilbertLayout::modes_and_qutrits({}, 2);
    DenseOperator rho(two);
    const std::array<int, 3> diag_idx = {0, 4, 8};
    for (int a : diag_idx)
        for (int b : diag_idx) rho(a, b) = 1.0 / 3.0;
    const DensityState state(rho);
    const DensityState reduced = partial_trace(state, {0});
    for (int i = 0; i < 3; ++i) {
        CHECK(reduced.op()(i, i).real() == doctest::Approx(1.0 / 3.0));
        for (int j = 0; j < 3; ++j)
            if (i != j) CHECK(std::abs(reduced.op()(i, j)) < 1e-15);
    }
    CHECK_THROWS_AS(partial_trace(state, {}), DomainError);
}

TEST_CASE("partial transpose spectrum and involution") {
    std::mt19937 rng(29);
    const auto joint = HilbertLayout::modes_and_qutrits({2}, 1);

    // product state: PT keeps the spectrum (stays a state)
    const DensityState rho_a = random_state(rng, HilbertLayout::single_mode(2));
    const DensityState rho_b = random_state(rng, HilbertLayout::single_qutrit());
    const DensityState product =
        DensityState::unchecked(kron_pair(rho_a.op(), rho_b.op(), joint));
    const DenseOperator pt = partial_transpose(product, {1});
    const auto ev_pt = hermitian_eigenvalues(pt);
    const auto ev = hermitian_eigenvalues(product.op());
    for (std::size_t i = 0; i < ev.size(); ++i)
        CHECK(ev_pt[i] == doctest::Approx(ev[i]).epsilon(1e-10));

    // Bell pair on levels {0,1}: eigenvalues {1/2, 1/2, 1/2, -1/2} on the support
    DenseOperator bell(joint);
    bell(0, 0) = 0.5;
    bell(0, 4) = 0.5;
    bell(4, 0) = 0.5;
    bell(4, 4) = 0.5;
    const DensityState bell_state(bell);
    const auto bell_pt_ev = hermitian_eigenvalues(partial_transpose(bell_state, {1}));
    CHECK(bell_pt_ev.front() == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(bell_pt_ev.back() == doctest::Approx(0.5).epsilon(1e-12));
    int halves = 0, neg_halves = 0, zeros = 0;
    for (double v : bell_pt_ev) {
        if (std::abs(v - 0.5) < 1e-12) ++halves;
        if (std::abs(v + 0.5) < 1e-12) ++neg_halves;
        if (std::abs(v) < 1e-12) ++zeros;
    }
    CHECK(halves == 3);
    CHECK(neg_halves == 1);
    CHECK(zeros == 2);

    // double transpose restores the matrix
    std::mt19937 rng2(31);
    const DensityState any = random_state(rng2, joint);
    const DenseOperator twice = partial_transpose_op(partial_transpose(any, {1}), {1});
    CHECK(max_abs_diff(twice, any.op()) == 0.0);

    CHECK_THROWS_AS(partial_transpose(any, {5}), DomainError);
}

TEST_CASE("trace norm") {
    std::mt19937 rng(17);
    const auto layout = HilbertLayout::modes_and_qutrits({2}, 1);
    for (int round = 0; round < 5; ++round) {
        const DensityState rho = random_state(rng, layout);
        CHECK(trace_norm(rho.op()) == doctest::Approx(1.0).epsilon(1e-10));
    }

    DenseOperator half(HilbertLayout::single_mode(2));
    half(0, 0) = 0.5;
    half(1, 1) = -0.5;
    CHECK(trace_norm(half) == doctest::Approx(1.0));

    DenseOperator skew(HilbertLayout::single_mode(2));
    skew(0, 1) = cdouble(0, 1);
    skew(1, 0) = cdouble(0, 1);  // not Hermitian
    CHECK_THROWS_AS(trace_norm(skew), DomainError);
}

TEST_CASE("density state validation catches violations") {
    const auto layout = HilbertLayout::single_qutrit();
    DenseOperator bad_trace(layout);
    bad_trace(0, 0) = 0.9;
    CHECK_THROWS_AS(DensityState{bad_trace}, NumericalCorruptionError);

    DenseOperator negative(layout);
    negative(0, 0) = 1.5;
    negative(1, 1) = -0.5;
    CHECK_THROWS_AS(DensityState{negative}, NumericalCorruptionError);

    DenseOperator skew(layout);
    skew(0, 0) = 1.0;
    skew(0, 1) = cdouble(0.1, 0.0);
    CHECK_THROWS_AS(DensityState{skew}, NumericalCorruptionError);
}
