#pragma once

#include <complex>
#include <stdexcept>

#include "herald/herald_engine.hpp"
#include "herald/phase_space.hpp"
#include "herald/rng.hpp"

namespace herald {

/// State-dependent correction displacements for one mode, conditioned on the
/// measured detection times. Applying down_branch to the early recoil history
/// and up_branch to the late one returns both to the initial alpha.
struct RewindPlan {
    std::complex<double> down_branch{0, 0};
    std::complex<double> up_branch{0, 0};
    std::complex<double> differential{0, 0}; // down_branch - up_branch
};

inline RewindPlan rewind_plan(const ModeSpec& mode, double t_mu, double t_nu, double T) {
    RewindPlan plan;
    plan.down_branch = recoil_rewind_argument(mode, t_mu, T, RecoilBranch::early);
    plan.up_branch = recoil_rewind_argument(mode, t_nu, T, RecoilBranch::late);
    plan.differential = plan.down_branch - plan.up_branch;
    return plan;
}

namespace detail {

/// Max over thermal draws of 1 - |inter-branch motional overlap| after the
/// plan displacements are applied. plan_t_{mu,nu} may differ from the state
/// times to model a mis-timed correction.
inline double disentangle_deficit(const ProtocolSpec& spec, double state_t_mu, double state_t_nu,
                                  double plan_t_mu, double plan_t_nu, std::uint64_t trials,
                                  std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("disentangle_deficit: trials must be >= 1");
    const double T = spec.timebin_T;
    double worst = 0;
    for (std::uint64_t i = 0; i < trials; ++i) {
        SampleRng rng(seed, i);
        double magnitude = 1.0;
        for (const EmitterSpec* em : {&spec.emitter_a, &spec.emitter_b}) {
            for (const auto& mode : em->modes) {
                const double sigma = std::sqrt(0.5 * mode.nbar);
                const CoherentAmplitude alpha{rng.normal(sigma), rng.normal(sigma)};
                DisplacedState down = recoil_state(mode, alpha, state_t_mu, T, RecoilBranch::early);
                DisplacedState up = recoil_state(mode, alpha, state_t_nu, T, RecoilBranch::late);
                down = displace(down, recoil_rewind_argument(mode, plan_t_mu, T, RecoilBranch::early));
                up = displace(up, recoil_rewind_argument(mode, plan_t_nu, T, RecoilBranch::late));
                magnitude *= std::abs(overlap(up.amplitude, down.amplitude));
            }
        }
        worst = std::max(worst, 1.0 - magnitude);
    }
    return worst;
}

} // namespace detail

/// Verify that the rewind disentangles motion from the qubits: returns the
/// worst-case inter-branch overlap deficit over random thermal draws. Exact
/// rewind drives this to rounding level (<= 1e-12).
inline double verify_disentangle(const ProtocolSpec& spec, double t_mu, double t_nu,
                                 std::uint64_t trials, std::uint64_t seed) {
    return detail::disentangle_deficit(spec, t_mu, t_nu, t_mu, t_nu, trials, seed);
}

/// Negative control: the plan is computed with the detection times swapped.
inline double verify_disentangle_swapped(const ProtocolSpec& spec, double t_mu, double t_nu,
                                         std::uint64_t trials, std::uint64_t seed) {
    return detail::disentangle_deficit(spec, t_mu, t_nu, t_nu, t_mu, trials, seed);
}

/// Channel fidelity with per-event rewind conditioned on the detection times.
/// The correction (scaled by `efficiency`, 1 = exact) is folded into the
/// displacement chains before the thermal average, so partial rewind is exact
/// as well. With exact rewind the motional overlap magnitudes are unity and
/// only beamsplitter imbalance and window effects remain.
inline ChannelEstimate estimate_channel_rewound(const ProtocolSpec& spec, HeraldChannel channel,
                                                double efficiency = 1.0,
                                                const QuadratureOptions& opts = {}) {
    spec.validate();
    const double off = spec.windows.known_offset;
    const double T = spec.timebin_T;
    const auto motional = [&spec, off, T, efficiency](double t_mu, double t_nu) {
        std::complex<double> m{1.0, 0.0};
        const auto mode_factor = [T, efficiency](const ModeSpec& mode, double tm, double tn) {
            DisplacedState down = recoil_state(mode, 0.0, tm, T, RecoilBranch::early);
            DisplacedState up = recoil_state(mode, 0.0, tn, T, RecoilBranch::late);
            down = displace(down, efficiency * recoil_rewind_argument(mode, tm, T, RecoilBranch::early));
            up = displace(up, efficiency * recoil_rewind_argument(mode, tn, T, RecoilBranch::late));
            return thermal_pair_overlap(mode.nbar, down, up);
        };
        for (const auto& mode : spec.emitter_a.modes)
            m *= mode_factor(mode, t_mu + off, t_nu + off);
        for (const auto& mode : spec.emitter_b.modes)
            m *= std::conj(mode_factor(mode, t_mu, t_nu));
        return m;
    };
    return detail::assemble_channel(spec, channel,
                                    detail::coherence_for(spec, channel, motional, opts));
}

inline BellResult bell_fidelity_rewound(const ProtocolSpec& spec, HeraldChannel channel,
                                        double efficiency = 1.0,
                                        const QuadratureOptions& opts = {}) {
    return estimate_channel_rewound(spec, channel, efficiency, opts).bell;
}

} // namespace herald
