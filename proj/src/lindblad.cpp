#include "qbatt/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "qbatt/kernels.hpp"

namespace qbatt {

namespace {

constexpr cdouble kImag(0.0, 1.0);

double herm_asym(const DenseOperator& a) {
    const int d = a.dim();
    double worst = 0.0;
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            const double v = std::abs(a(i, j) - std::conj(a(j, i)));
            if (v > worst) worst = v;
        }
    }
    return worst;
}

}  // namespace

void DissipatorSpec::validate() const {
    std::size_t expected = 0;
    switch (kind) {
        case DissipatorKind::ResonatorDecay: expected = 1; break;
        case DissipatorKind::Relaxation: expected = 2; break;
        case DissipatorKind::Dephasing: expected = 2; break;
    }
    if (rates.size() != expected)
        throw DomainError("dissipator: wrong number of rates for channel");
    for (double r : rates)
        if (r < 0) throw DomainError("dissipator: rates must be non-negative");
}

std::vector<DissipatorSpec> dissipators_from(const ModelParams& p) {
    const DissipatorScope scope =
        p.local_dissipation ? DissipatorScope::Local : DissipatorScope::Collective;
    std::vector<DissipatorSpec> specs;
    specs.push_back({DissipatorKind::ResonatorDecay, DissipatorScope::Collective, {p.kappa}});
    specs.push_back({DissipatorKind::Relaxation, scope, {p.gamma_rel[0], p.gamma_rel[1]}});
    specs.push_back({DissipatorKind::Dephasing, scope, {p.gamma_dep[0], p.gamma_dep[1]}});
    return specs;
}

std::vector<JumpOperator> build_jump_operators(const std::vector<DissipatorSpec>& specs,
                                               const HilbertLayout& layout) {
    std::vector<JumpOperator> jumps;
    for (const auto& spec : specs) {
        spec.validate();
        switch (spec.kind) {
            case DissipatorKind::ResonatorDecay: {
                const double kappa = spec.rates[0];
                if (kappa == 0.0) break;
                const auto ms = layout.mode_slots();
                if (ms.empty())
                    throw DomainError("resonator decay requires a mode slot in the layout");
                for (int slot : ms) {
                    jumps.push_back(
                        {embed(boson_annihilation(layout.dim(slot)), slot, layout), kappa});
                }
                break;
            }
            case DissipatorKind::Relaxation: {
                // jump |n><m| with n = m-1; rates {G01, G12}
                for (int m = 1; m <= 2; ++m) {
                    const double rate = spec.rates[static_cast<std::size_t>(m - 1)];
                    if (rate == 0.0) continue;
                    if (spec.scope == DissipatorScope::Collective) {
                        jumps.push_back({collective_transition(m - 1, m, layout), rate});
                    } else {
                        for (int slot : layout.qutrit_slots()) {
                            jumps.push_back(
                                {embed(level_projector(m - 1, m), slot, layout), rate});
                        }
                    }
                }
                break;
            }
            case DissipatorKind::Dephasing: {
                for (int m = 1; m <= 2; ++m) {
                    const double rate = spec.rates[static_cast<std::size_t>(m - 1)];
                    if (rate == 0.0) continue;
                    if (spec.scope == DissipatorScope::Collective) {
                        jumps.push_back({collective_transition(m, m, layout), rate});
                    } else {
                        for (int slot : layout.qutrit_slots()) {
                            jumps.push_back({embed(level_projector(m, m), slot, layout), rate});
                        }
                    }
                }
                break;
            }
        }
    }
    return jumps;
}

DenseOperator dissipator_apply(const DenseOperator& L, double rate,
                               const DenseOperator& rho) {
    if (rate < 0) throw DomainError("dissipator_apply: rate must be non-negative");
    if (!(L.layout() == rho.layout()))
        throw InvalidDimensionError("dissipator_apply: layout mismatch");
    DenseOperator out(rho.layout());
    if (rate == 0.0) return out;
    const DenseOperator ld = L.dagger();
    const DenseOperator m = ld * L;
    out = L * rho * ld;
    out -= cdouble(0.5, 0.0) * (m * rho);
    out -= cdouble(0.5, 0.0) * (rho * m);
    out *= rate;
    return out;
}

DenseOperator charging_rhs(const DenseOperator& rho, const DenseOperator& H,
                           const std::vector<JumpOperator>& jumps) {
    if (!(rho.layout() == H.layout()))
        throw InvalidDimensionError("charging_rhs: layout mismatch");
    const auto d = static_cast<std::size_t>(rho.dim());
    auto& kern = kernels::active_kernels();
    DenseOperator out(rho.layout());
    // i [rho, H]
    kern.gemm_acc(d, d, d, kImag, rho.data(), d, H.data(), d, out.data(), d);
    kern.gemm_acc(d, d, d, -kImag, H.data(), d, rho.data(), d, out.data(), d);
    for (const auto& j : jumps) out += dissipator_apply(j.op, j.rate, rho);
    return out;
}

DenseOperator charging_rhs(const DenseOperator& rho, double /*t*/, const DenseOperator& H,
                           const std::vector<DissipatorSpec>& dissipators) {
    return charging_rhs(rho, H, build_jump_operators(dissipators, rho.layout()));
}

DenseOperator self_discharge_rhs(const DenseOperator& rho, const DenseOperator& H_q,
                                 const std::vector<DissipatorSpec>& dissipators) {
    if (rho.layout().n_modes() != 0)
        throw InvalidDimensionError(
            "self_discharge_rhs: expects a battery-only layout (trace out modes first)");
    for (const auto& spec : dissipators) {
        if (spec.kind == DissipatorKind::ResonatorDecay && spec.rates[0] != 0.0)
            throw DomainError("self_discharge_rhs: no resonator channel after disconnection");
    }
    return charging_rhs(rho, H_q, build_jump_operators(dissipators, rho.layout()));
}

StructuredLindbladRhs::StructuredLindbladRhs(const ModelParams& p,
                                             const HilbertLayout& layout,
                                             const std::vector<DissipatorSpec>& specs) {
    p.validate();
    const bool with_modes = layout.n_modes() > 0;
    if (with_modes) {
        if (!(layout == p.layout()))
            throw InvalidDimensionError("structured rhs: layout does not match model");
    } else {
        if (!(layout == p.battery_layout()))
            throw InvalidDimensionError("structured rhs: layout does not match battery");
    }
    c_ = layout.charger_dim();
    b_ = layout.battery_dim();
    d_ = c_ * b_;
    t1_.assign(static_cast<std::size_t>(d_) * d_, cdouble(0.0, 0.0));
    t2_.assign(static_cast<std::size_t>(d_) * d_, cdouble(0.0, 0.0));
    diag_b_.assign(static_cast<std::size_t>(d_), cdouble(0.0, 0.0));

    const HilbertLayout battery = p.battery_layout();

    // B = iH + K accumulates here; K = 1/2 sum rate L^dag L.
    DenseOperator wb = build_battery_hamiltonian(p, battery);
    wb *= kImag;

    // mode occupation of each charger index, per mode
    std::vector<std::vector<int>> occ(static_cast<std::size_t>(p.n_modes));
    if (with_modes) {
        const HilbertLayout charger = HilbertLayout::modes_and_qutrits(p.cutoff, 0);
        std::vector<int> idx(static_cast<std::size_t>(p.n_modes));
        for (int k = 0; k < p.n_modes; ++k)
            occ[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(c_));
        for (int m = 0; m < c_; ++m) {
            charger.unflatten(m, idx);
            for (int k = 0; k < p.n_modes; ++k)
                occ[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)] =
                    idx[static_cast<std::size_t>(k)];
        }
        // i * H_r on the diagonal
        for (int m = 0; m < c_; ++m) {
            double h_mode = 0;
            for (int k = 0; k < p.n_modes; ++k)
                h_mode += p.omega_r[static_cast<std::size_t>(k)] *
                          occ[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)];
            for (int i = 0; i < b_; ++i)
                diag_b_[static_cast<std::size_t>(m * b_ + i)] += kImag * cdouble(h_mode, 0.0);
        }
        // coupling terms: i * (i g_k) X_k (x) V  ->  alpha = -g_k
        DenseOperator v_bat(battery);
        const DenseOperator v = qutrit_lowering() - qutrit_lowering().dagger();
        for (int s : battery.qutrit_slots()) v_bat += embed(v, s, battery);
        for (int k = 0; k < p.n_modes; ++k) {
            const DenseOperator a = boson_annihilation(p.cutoff[static_cast<std::size_t>(k)]);
            const DenseOperator x = embed(a + a.dagger(), k, charger);
            KronTerm term;
            term.a.assign(x.data(), x.data() + static_cast<std::size_t>(c_) * c_);
            term.w.assign(v_bat.data(), v_bat.data() + static_cast<std::size_t>(b_) * b_);
            term.alpha = cdouble(-p.g[static_cast<std::size_t>(k)], 0.0);
            kron_.push_back(std::move(term));
        }
    }

    std::vector<int> bidx(static_cast<std::size_t>(battery.slots()));
    auto level_count = [&](int flat, int level) {
        battery.unflatten(flat, bidx);
        int count = 0;
        for (int v : bidx)
            if (v == level) ++count;
        return count;
    };

    for (const auto& spec : specs) {
        spec.validate();
        switch (spec.kind) {
            case DissipatorKind::ResonatorDecay: {
                const double kappa = spec.rates[0];
                if (kappa == 0.0) break;
                if (!with_modes)
                    throw DomainError("resonator decay requires mode slots in the layout");
                const HilbertLayout charger = HilbertLayout::modes_and_qutrits(p.cutoff, 0);
                for (int k = 0; k < p.n_modes; ++k) {
                    const DenseOperator a = embed(
                        boson_annihilation(p.cutoff[static_cast<std::size_t>(k)]), k, charger);
                    ChargerJump jump;
                    jump.a.assign(a.data(), a.data() + static_cast<std::size_t>(c_) * c_);
                    jump.a_conj.resize(jump.a.size());
                    for (std::size_t i = 0; i < jump.a.size(); ++i)
                        jump.a_conj[i] = std::conj(jump.a[i]);
                    jump.rate = kappa;
                    charger_jumps_.push_back(std::move(jump));
                    // K += kappa/2 a^dag a (diagonal)
                    for (int m = 0; m < c_; ++m) {
                        const double nk =
                            occ[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)];
                        for (int i = 0; i < b_; ++i)
                            diag_b_[static_cast<std::size_t>(m * b_ + i)] += 0.5 * kappa * nk;
                    }
                }
                break;
            }
            case DissipatorKind::Relaxation: {
                std::vector<DenseOperator> ops;
                std::vector<double> rates;
                for (int m = 1; m <= 2; ++m) {
                    const double rate = spec.rates[static_cast<std::size_t>(m - 1)];
                    if (rate == 0.0) continue;
                    if (spec.scope == DissipatorScope::Collective) {
                        ops.push_back(collective_transition(m - 1, m, battery));
                        rates.push_back(rate);
                    } else {
                        for (int slot : battery.qutrit_slots()) {
                            ops.push_back(embed(level_projector(m - 1, m), slot, battery));
                            rates.push_back(rate);
                        }
                    }
                }
                for (std::size_t i = 0; i < ops.size(); ++i) {
                    const DenseOperator dag = ops[i].dagger();
                    BatteryJump jump;
                    jump.w.assign(ops[i].data(),
                                  ops[i].data() + static_cast<std::size_t>(b_) * b_);
                    jump.w_dag.assign(dag.data(),
                                      dag.data() + static_cast<std::size_t>(b_) * b_);
                    jump.rate = rates[i];
                    battery_jumps_.push_back(std::move(jump));
                    wb += cdouble(0.5 * rates[i], 0.0) * (dag * ops[i]);
                }
                break;
            }
            case DissipatorKind::Dephasing: {
                for (int m = 1; m <= 2; ++m) {
                    const double rate = spec.rates[static_cast<std::size_t>(m - 1)];
                    if (rate == 0.0) continue;
                    if (spec.scope == DissipatorScope::Collective) {
                        DiagJump jump;
                        jump.d.resize(static_cast<std::size_t>(d_));
                        jump.rate = rate;
                        for (int i = 0; i < b_; ++i) {
                            const double count = level_count(i, m);
                            for (int mc = 0; mc < c_; ++mc)
                                jump.d[static_cast<std::size_t>(mc * b_ + i)] = count;
                            for (int mc = 0; mc < c_; ++mc)
                                diag_b_[static_cast<std::size_t>(mc * b_ + i)] +=
                                    0.5 * rate * count * count;
                        }
                        diag_jumps_.push_back(std::move(jump));
                    } else {
                        for (int slot = 0; slot < battery.slots(); ++slot) {
                            DiagJump jump;
                            jump.d.resize(static_cast<std::size_t>(d_));
                            jump.rate = rate;
                            for (int i = 0; i < b_; ++i) {
                                battery.unflatten(i, bidx);
                                const double ind =
                                    bidx[static_cast<std::size_t>(slot)] == m ? 1.0 : 0.0;
                                for (int mc = 0; mc < c_; ++mc)
                                    jump.d[static_cast<std::size_t>(mc * b_ + i)] = ind;
                                for (int mc = 0; mc < c_; ++mc)
                                    diag_b_[static_cast<std::size_t>(mc * b_ + i)] +=
                                        0.5 * rate * ind;
                            }
                            diag_jumps_.push_back(std::move(jump));
                        }
                    }
                }
                break;
            }
        }
    }

    w_b_.assign(wb.data(), wb.data() + static_cast<std::size_t>(b_) * b_);
    has_w_b_ = true;
}

void StructuredLindbladRhs::apply_b(const cdouble* rho, cdouble* out) const {
    auto& kern = kernels::active_kernels();
    const auto b = static_cast<std::size_t>(b_);
    const auto c = static_cast<std::size_t>(c_);
    const auto d = static_cast<std::size_t>(d_);
    std::fill(out, out + d * d, cdouble(0.0, 0.0));
    kern.row_scale_acc(d, d, cdouble(1.0, 0.0), diag_b_.data(), rho, d, out, d);
    if (has_w_b_) {
        for (std::size_t m = 0; m < c; ++m) {
            kern.gemm_acc(b, d, b, cdouble(1.0, 0.0), w_b_.data(), b, rho + m * b * d, d,
                          out + m * b * d, d);
        }
    }
    for (const auto& term : kron_) {
        std::fill(t2_.begin(), t2_.end(), cdouble(0.0, 0.0));
        for (std::size_t m = 0; m < c; ++m) {
            kern.gemm_acc(b, d, b, cdouble(1.0, 0.0), term.w.data(), b, rho + m * b * d, d,
                          t2_.data() + m * b * d, d);
        }
        kern.gemm_acc(c, b * d, c, term.alpha, term.a.data(), c, t2_.data(), b * d, out,
                      b * d);
    }
}

void StructuredLindbladRhs::operator()(const DenseOperator& rho, double /*t*/,
                                       DenseOperator& out) const {
    if (rho.dim() != d_ || out.dim() != d_)
        throw InvalidDimensionError("structured rhs: dimension mismatch");
    auto& kern = kernels::active_kernels();
    const auto b = static_cast<std::size_t>(b_);
    const auto c = static_cast<std::size_t>(c_);
    const auto d = static_cast<std::size_t>(d_);

    // coherent part and anticommutator: out = -(B rho) - (B rho)^dag
    apply_b(rho.data(), t1_.data());
    out.set_zero();
    kern.acc_plus_adjoint(d, cdouble(-1.0, 0.0), t1_.data(), d, out.data(), d);

    for (const auto& jump : charger_jumps_) {
        std::fill(t1_.begin(), t1_.end(), cdouble(0.0, 0.0));
        kern.gemm_acc(c, b * d, c, cdouble(1.0, 0.0), jump.a.data(), c, rho.data(), b * d,
                      t1_.data(), b * d);
        for (std::size_t r = 0; r < d; ++r) {
            kern.gemm_acc(c, b, c, cdouble(jump.rate, 0.0), jump.a_conj.data(), c,
                          t1_.data() + r * d, b, out.data() + r * d, b);
        }
    }
    for (const auto& jump : battery_jumps_) {
        std::fill(t1_.begin(), t1_.end(), cdouble(0.0, 0.0));
        for (std::size_t m = 0; m < c; ++m) {
            kern.gemm_acc(b, d, b, cdouble(1.0, 0.0), jump.w.data(), b, rho.data() + m * b * d,
                          d, t1_.data() + m * b * d, d);
        }
        for (std::size_t m = 0; m < c; ++m) {
            kern.gemm_acc(d, b, b, cdouble(jump.rate, 0.0), t1_.data() + m * b, d,
                          jump.w_dag.data(), b, out.data() + m * b, d);
        }
    }
    for (const auto& jump : diag_jumps_) {
        kern.sandwich_diag_acc(d, jump.rate, jump.d.data(), rho.data(), d, out.data(), d);
    }
}

RhsFn make_structured_rhs(const ModelParams& p, const HilbertLayout& layout,
                          const std::vector<DissipatorSpec>& specs) {
    auto rhs = std::make_shared<StructuredLindbladRhs>(p, layout, specs);
    return [rhs](const DenseOperator& rho, double t, DenseOperator& out) {
        (*rhs)(rho, t, out);
    };
}

RhsFn make_drive_rhs(const DriveParams& d, const std::vector<DissipatorSpec>& specs) {
    d.validate();
    const HilbertLayout layout = HilbertLayout::single_qutrit();
    auto jumps = std::make_shared<std::vector<JumpOperator>>(
        build_jump_operators(specs, layout));
    const DriveParams drive = d;
    return [drive, jumps](const DenseOperator& rho, double t, DenseOperator& out) {
        const DenseOperator h = build_drive_hamiltonian(t, drive);
        out = charging_rhs(rho, h, *jumps);
    };
}

void IntegratorConfig::validate() const {
    if (dt <= 0) throw DomainError("integrator: dt must be positive");
    if (abs_tol <= 0 || rel_tol <= 0)
        throw DomainError("integrator: tolerances must be positive");
    if (t_end <= 0) throw DomainError("integrator: t_end must be positive");
    if (record_every < 1) throw DomainError("integrator: record_every must be >= 1");
}

namespace {

class Recorder {
public:
    Recorder(TrajectoryRecord& rec, const std::vector<SampleObserver>& observers)
        : rec_(rec), observers_(observers) {}

    void operator()(const DenseOperator& y, double t, double herm_err) {
        TrajectorySample s;
        s.t = t;
        const auto d = static_cast<std::size_t>(y.dim());
        auto& kern = kernels::active_kernels();
        s.trace_err = std::abs(y.trace() - cdouble(1.0, 0.0));
        s.herm_err = herm_err;
        s.min_eig = min_eigenvalue(y);
        s.purity = kern.abs2_sum(d, d, y.data(), d);
        for (const auto& obs : observers_) obs(y, t, s);
        if (s.trace_err > 10 * IntegratorConfig::kTraceTol ||
            s.herm_err > 10 * IntegratorConfig::kHermTol ||
            s.min_eig < -10 * IntegratorConfig::kPositivityTol) {
            rec_.diagnostics_flagged = true;
        }
        rec_.worst_trace_err = std::max(rec_.worst_trace_err, s.trace_err);
        rec_.worst_herm_err = std::max(rec_.worst_herm_err, s.herm_err);
        rec_.worst_min_eig = std::min(rec_.worst_min_eig, s.min_eig);
        rec_.samples.push_back(s);
    }

private:
    TrajectoryRecord& rec_;
    const std::vector<SampleObserver>& observers_;
};

TrajectoryRecord integrate_fixed_rk4(const RhsFn& rhs, const DensityState& rho0,
                                     const IntegratorConfig& cfg,
                                     const std::vector<SampleObserver>& observers) {
    DenseOperator y = rho0.op();
    const HilbertLayout layout = y.layout();
    const auto n = static_cast<std::size_t>(y.dim()) * static_cast<std::size_t>(y.dim());
    auto& kern = kernels::active_kernels();

    DenseOperator k1(layout), k2(layout), k3(layout), k4(layout), ytmp(layout);

    TrajectoryRecord rec;
    Recorder record(rec, observers);
    record(y, 0.0, 0.0);

    const double dt = cfg.dt;
    const long nfull = static_cast<long>(std::floor(cfg.t_end / dt + 1e-9));
    const double remainder = cfg.t_end - static_cast<double>(nfull) * dt;
    const bool has_tail = remainder > 1e-12;

    double herm_acc = 0.0;
    auto step = [&](double t, double h) {
        rhs(y, t, k1);
        kern.stage(n, y.data(), 0.5 * h, k1.data(), ytmp.data());
        rhs(ytmp, t + 0.5 * h, k2);
        kern.stage(n, y.data(), 0.5 * h, k2.data(), ytmp.data());
        rhs(ytmp, t + 0.5 * h, k3);
        kern.stage(n, y.data(), h, k3.data(), ytmp.data());
        rhs(ytmp, t + h, k4);
        kern.combine4(n, y.data(), h / 6.0, k1.data(), h / 3.0, k2.data(), h / 3.0,
                      k3.data(), h / 6.0, k4.data());
        const auto d = static_cast<std::size_t>(y.dim());
        if (cfg.hermitize) {
            herm_acc = std::max(herm_acc, kern.hermitize(d, y.data(), d));
        } else {
            herm_acc = std::max(herm_acc, herm_asym(y));
        }
    };

    for (long i = 1; i <= nfull; ++i) {
        step(static_cast<double>(i - 1) * dt, dt);
        const double t = static_cast<double>(i) * dt;
        if (i % cfg.record_every == 0 || (i == nfull && !has_tail)) {
            record(y, i == nfull && !has_tail ? cfg.t_end : t, herm_acc);
            herm_acc = 0.0;
        }
    }
    if (has_tail) {
        step(static_cast<double>(nfull) * dt, remainder);
        record(y, cfg.t_end, herm_acc);
    }
    rec.final_state = y;
    return rec;
}

// Dormand-Prince 5(4), FSAL; the propagated solution is 5th order.
TrajectoryRecord integrate_adaptive(const RhsFn& rhs, const DensityState& rho0,
                                    const IntegratorConfig& cfg,
                                    const std::vector<SampleObserver>& observers) {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

    DenseOperator y = rho0.op();
    const HilbertLayout layout = y.layout();
    const auto n = static_cast<std::size_t>(y.dim()) * static_cast<std::size_t>(y.dim());
    const auto d = static_cast<std::size_t>(y.dim());
    auto& kern = kernels::active_kernels();

    std::vector<DenseOperator> k;
    for (int i = 0; i < 7; ++i) k.emplace_back(layout);
    DenseOperator ytmp(layout), ynew(layout);

    TrajectoryRecord rec;
    Recorder record(rec, observers);
    record(y, 0.0, 0.0);

    const double s = cfg.sample_interval();
    const double t_end = cfg.t_end;
    long sample_idx = 1;
    auto next_sample_t = [&]() { return std::min(static_cast<double>(sample_idx) * s, t_end); };

    auto axpy_real = [&](DenseOperator& dst, double alpha, const DenseOperator& src) {
        kern.axpy(n, cdouble(alpha, 0.0), src.data(), dst.data());
    };

    double t = 0.0;
    double h = std::min(cfg.dt, s);
    double herm_acc = 0.0;
    rhs(y, 0.0, k[0]);

    const double h_floor = 1e-13 * std::max(1.0, t_end);
    while (t < t_end - 1e-12 * std::max(1.0, t_end)) {
        const double target = next_sample_t();
        h = std::min(h, target - t);
        if (h < h_floor)
            throw IntegrationFailureError("adaptive step size underflow", t, y);

        kern.stage(n, y.data(), h * a21, k[0].data(), ytmp.data());
        rhs(ytmp, t + c2 * h, k[1]);

        kern.stage(n, y.data(), h * a31, k[0].data(), ytmp.data());
        axpy_real(ytmp, h * a32, k[1]);
        rhs(ytmp, t + c3 * h, k[2]);

        kern.stage(n, y.data(), h * a41, k[0].data(), ytmp.data());
        axpy_real(ytmp, h * a42, k[1]);
        axpy_real(ytmp, h * a43, k[2]);
        rhs(ytmp, t + c4 * h, k[3]);

        kern.stage(n, y.data(), h * a51, k[0].data(), ytmp.data());
        axpy_real(ytmp, h * a52, k[1]);
        axpy_real(ytmp, h * a53, k[2]);
        axpy_real(ytmp, h * a54, k[3]);
        rhs(ytmp, t + c5 * h, k[4]);

        kern.stage(n, y.data(), h * a61, k[0].data(), ytmp.data());
        axpy_real(ytmp, h * a62, k[1]);
        axpy_real(ytmp, h * a63, k[2]);
        axpy_real(ytmp, h * a64, k[3]);
        axpy_real(ytmp, h * a65, k[4]);
        rhs(ytmp, t + h, k[5]);

        kern.stage(n, y.data(), h * b1, k[0].data(), ynew.data());
        axpy_real(ynew, h * b3, k[2]);
        axpy_real(ynew, h * b4, k[3]);
        axpy_real(ynew, h * b5, k[4]);
        axpy_real(ynew, h * b6, k[5]);
        rhs(ynew, t + h, k[6]);

        // scaled error norm from the embedded 4th-order difference
        double err = 0.0;
        const cdouble* yv = y.data();
        const cdouble* ynv = ynew.data();
        const cdouble* k1v = k[0].data();
        const cdouble* k3v = k[2].data();
        const cdouble* k4v = k[3].data();
        const cdouble* k5v = k[4].data();
        const cdouble* k6v = k[5].data();
        const cdouble* k7v = k[6].data();
        for (std::size_t i = 0; i < n; ++i) {
            const cdouble ev = h * (e1 * k1v[i] + e3 * k3v[i] + e4 * k4v[i] +
                                    e5 * k5v[i] + e6 * k6v[i] + e7 * k7v[i]);
            const double sc =
                cfg.abs_tol + cfg.rel_tol * std::max(std::abs(yv[i]), std::abs(ynv[i]));
            const double scaled = std::abs(ev) / sc;
            if (!std::isfinite(scaled)) {
                err = std::numeric_limits<double>::infinity();
                break;
            }
            err = std::max(err, scaled);
        }

        if (!std::isfinite(err)) {
            h *= 0.1;
            if (h < h_floor)
                throw IntegrationFailureError("adaptive step produced non-finite values", t, y);
            continue;
        }

        if (err <= 1.0) {
            t += h;
            if (std::abs(t - target) < 1e-12 * std::max(1.0, target)) t = target;
            std::swap(y, ynew);
            std::swap(k[0], k[6]);  // FSAL
            if (cfg.hermitize) {
                herm_acc = std::max(herm_acc, kern.hermitize(d, y.data(), d));
            } else {
                herm_acc = std::max(herm_acc, herm_asym(y));
            }
            if (t == target) {
                record(y, t, herm_acc);
                herm_acc = 0.0;
                ++sample_idx;
                // FSAL derivative is effectively unchanged by hermitization
            }
            const double grow = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
            h *= std::clamp(grow, 0.2, 5.0);
            h = std::min(h, s);
        } else {
            const double shrink = 0.9 * std::pow(err, -0.2);
            h *= std::clamp(shrink, 0.1, 0.9);
        }
    }
    rec.final_state = y;
    return rec;
}

}  // namespace

TrajectoryRecord integrate(const RhsFn& rhs, const DensityState& rho0,
                           const IntegratorConfig& cfg,
                           const std::vector<SampleObserver>& observers) {
    cfg.validate();
    rho0.validate();
    if (cfg.method == IntegratorConfig::Method::FixedRk4) {
        return integrate_fixed_rk4(rhs, rho0, cfg, observers);
    }
    return integrate_adaptive(rhs, rho0, cfg, observers);
}

SteadyStateResult detect_steady_state(const TrajectoryRecord& traj, double window,
                                      double tol) {
    if (window <= 0 || tol <= 0)
        throw DomainError("detect_steady_state: window and tol must be positive");
    const auto& samples = traj.samples;
    if (samples.size() < 2)
        throw InsufficientDataError("detect_steady_state: trajectory has too few samples");
    const double horizon = samples.back().t - samples.front().t;
    if (horizon < window - 1e-12)
        throw InsufficientDataError("detect_steady_state: horizon shorter than window");

    auto window_fires = [&](std::size_t end, std::size_t& begin_out) {
        const double t_lo = samples[end].t - window;
        std::size_t begin = end;
        while (begin > 0 && samples[begin - 1].t >= t_lo - 1e-12) --begin;
        begin_out = begin;
        double lo = samples[begin].delta_E, hi = lo, amax = std::abs(lo);
        for (std::size_t i = begin + 1; i <= end; ++i) {
            lo = std::min(lo, samples[i].delta_E);
            hi = std::max(hi, samples[i].delta_E);
            amax = std::max(amax, std::abs(samples[i].delta_E));
        }
        return (hi - lo) < tol * std::max(1.0, amax);
    };

    SteadyStateResult res;
    // E_s over the trailing window; steady means the final window is quiet
    std::size_t tail_begin = 0;
    res.is_steady = window_fires(samples.size() - 1, tail_begin);
    double sum = 0.0;
    for (std::size_t i = tail_begin; i < samples.size(); ++i) sum += samples[i].delta_E;
    res.E_s = sum / static_cast<double>(samples.size() - tail_begin);

    if (res.is_steady) {
        std::size_t begin = 0;
        for (std::size_t e = 0; e < samples.size(); ++e) {
            if (samples[e].t - samples.front().t < window - 1e-12) continue;
            if (window_fires(e, begin)) {
                res.t_steady = samples[e].t;
                break;
            }
        }
    }
    return res;
}

}  // namespace qbatt
