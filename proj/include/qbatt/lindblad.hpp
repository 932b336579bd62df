#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "qbatt/model.hpp"
#include "qbatt/tensor.hpp"

namespace qbatt {

enum class DissipatorKind { ResonatorDecay, Relaxation, Dephasing };
enum class DissipatorScope { Collective, Local };

// One environmental channel. Rates: ResonatorDecay {kappa},
// Relaxation {G01, G12}, Dephasing {G11, G22}. Collective scope sums the
// site transitions into one jump operator per channel; Local attaches an
// independent jump to every site.
struct DissipatorSpec {
    DissipatorKind kind;
    DissipatorScope scope = DissipatorScope::Collective;
    std::vector<double> rates;

    void validate() const;
};

std::vector<DissipatorSpec> dissipators_from(const ModelParams& p);

struct JumpOperator {
    DenseOperator op;
    double rate;
};

// Materializes the jump operators of each channel on the given layout.
// Channels with zero rate are dropped.
std::vector<JumpOperator> build_jump_operators(const std::vector<DissipatorSpec>& specs,
                                               const HilbertLayout& layout);

// rate * (L rho L^dag - 1/2 {L^dag L, rho})
DenseOperator dissipator_apply(const DenseOperator& L, double rate,
                               const DenseOperator& rho);

// Dense reference right-hand sides: i[rho, H] plus the channel dissipators.
DenseOperator charging_rhs(const DenseOperator& rho, double t, const DenseOperator& H,
                           const std::vector<DissipatorSpec>& dissipators);
DenseOperator charging_rhs(const DenseOperator& rho, const DenseOperator& H,
                           const std::vector<JumpOperator>& jumps);

// As charging_rhs but restricted to a battery-only layout; resonator-decay
// channels are rejected.
DenseOperator self_discharge_rhs(const DenseOperator& rho, const DenseOperator& H_q,
                                 const std::vector<DissipatorSpec>& dissipators);

using RhsFn = std::function<void(const DenseOperator& rho, double t, DenseOperator& out)>;

// Production right-hand side. Exploits the charger (x) battery factorization
// of every operator in the model: the Hamiltonian-plus-anticommutator part is
// applied through diagonal, battery-block and mode-(x)-battery terms, jump
// sandwiches through block panel products, and dephasing through a diagonal
// sandwich. Requires Hermitian input (the integrator guarantees it);
// equivalence against the dense reference is part of the test suite.
class StructuredLindbladRhs {
public:
    StructuredLindbladRhs(const ModelParams& p, const HilbertLayout& layout,
                          const std::vector<DissipatorSpec>& specs);

    void operator()(const DenseOperator& rho, double t, DenseOperator& out) const;

    // One instance serves one integration run at a time (internal workspace).
private:
    struct ChargerJump {
        std::vector<cdouble> a;       // c x c jump on the charger factor
        std::vector<cdouble> a_conj;  // conj(a), right-application of a^dag
        double rate;
    };
    struct BatteryJump {
        std::vector<cdouble> w;      // b x b jump on the battery factor
        std::vector<cdouble> w_dag;
        double rate;
    };
    struct DiagJump {
        std::vector<cdouble> d;  // length D diagonal
        double rate;
    };
    struct KronTerm {
        std::vector<cdouble> a;  // c x c mode factor
        std::vector<cdouble> w;  // b x b battery factor
        cdouble alpha;
    };

    int c_ = 1, b_ = 1, d_ = 1;
    std::vector<cdouble> diag_b_;     // diagonal part of B = iH + K
    std::vector<cdouble> w_b_;        // battery-block part of B (b x b)
    bool has_w_b_ = false;
    std::vector<KronTerm> kron_;      // mode (x) battery parts of B
    std::vector<ChargerJump> charger_jumps_;
    std::vector<BatteryJump> battery_jumps_;
    std::vector<DiagJump> diag_jumps_;

    mutable std::vector<cdouble> t1_, t2_;

    void apply_b(const cdouble* rho, cdouble* out) const;  // out := B rho
};

RhsFn make_structured_rhs(const ModelParams& p, const HilbertLayout& layout,
                          const std::vector<DissipatorSpec>& specs);

// Driven-qutrit right-hand side (time-dependent 3x3 Hamiltonian).
RhsFn make_drive_rhs(const DriveParams& d, const std::vector<DissipatorSpec>& specs);

struct IntegratorConfig {
    enum class Method { FixedRk4, AdaptiveEmbedded };

    Method method = Method::FixedRk4;
    double dt = 1e-2;
    double abs_tol = 1e-9;
    double rel_tol = 1e-8;
    double t_end = 20.0;
    int record_every = 10;
    bool hermitize = true;

    static constexpr double kTraceTol = 1e-9;
    static constexpr double kHermTol = 1e-9;
    static constexpr double kPositivityTol = 1e-8;

    void validate() const;
    double sample_interval() const { return dt * record_every; }
};

struct TrajectorySample {
    double t = 0;
    // physics columns, filled by observers
    double delta_E = 0;
    double power = 0;
    double coherence = 0;
    double negativity = 0;
    double total_E = 0;  // full-system energy; closed-run conservation checks
    // diagnostics, filled by the integrator
    double trace_err = 0;
    double herm_err = 0;  // max pre-hermitization asymmetry since last sample
    double min_eig = 0;
    double purity = 0;
};

struct TrajectoryRecord {
    std::vector<TrajectorySample> samples;
    DenseOperator final_state;
    bool diagnostics_flagged = false;
    double worst_trace_err = 0;
    double worst_herm_err = 0;
    double worst_min_eig = 0;

    const TrajectorySample& back() const { return samples.back(); }
};

using SampleObserver =
    std::function<void(const DenseOperator& rho, double t, TrajectorySample&)>;

class IntegrationFailureError : public Error {
public:
    IntegrationFailureError(const std::string& msg, double t_last, DenseOperator last_state)
        : Error(msg), t_last(t_last), last_state(std::move(last_state)) {}

    double t_last;
    DenseOperator last_state;
};

// Evolves rho0 to cfg.t_end, sampling diagnostics and observer columns on the
// grid {0, s, 2s, ..., t_end} with s = dt * record_every (both methods share
// the grid; the adaptive stepper clips steps to land on it).
TrajectoryRecord integrate(const RhsFn& rhs, const DensityState& rho0,
                           const IntegratorConfig& cfg,
                           const std::vector<SampleObserver>& observers = {});

struct SteadyStateResult {
    bool is_steady = false;
    double E_s = 0;
    double t_steady = 0;
};

// Steady when max-min of delta_E over a trailing window drops below
// tol * max(1, |delta_E|). t_steady is the earliest window end that fires;
// E_s is the mean over the final window.
SteadyStateResult detect_steady_state(const TrajectoryRecord& traj, double window = 10.0,
                                      double tol = 1e-4);

}  // namespace qbatt
