#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "herald/atoms.hpp"
#include "herald/phase_space.hpp"
#include "herald/quadrature.hpp"
#include "herald/rng.hpp"
#include "herald/temporal.hpp"

namespace herald {

/// Lossless beamsplitter with real field coefficients, t^2 + r^2 = 1.
struct BeamsplitterSpec {
    double transmission = 0.70710678118654752440;
    double reflection = 0.70710678118654752440;

    static BeamsplitterSpec balanced() { return {}; }

    /// Build from the power imbalance delta = t^2 - r^2.
    static BeamsplitterSpec from_imbalance(double delta) {
        if (!(std::abs(delta) < 1.0))
            throw std::invalid_argument("BeamsplitterSpec: |delta| must be < 1");
        return {std::sqrt(0.5 * (1.0 + delta)), std::sqrt(0.5 * (1.0 - delta))};
    }

    double power_imbalance() const { return transmission * transmission - reflection * reflection; }

    void validate() const {
        if (!(transmission >= 0 && transmission <= 1) || !(reflection >= 0 && reflection <= 1))
            throw std::invalid_argument("BeamsplitterSpec: coefficients must lie in [0, 1]");
        if (std::abs(transmission * transmission + reflection * reflection - 1.0) > 1e-12)
            throw std::invalid_argument("BeamsplitterSpec: t^2 + r^2 must equal 1");
    }
};

/// Which detector pair fired. Opposite-side pairs herald the Psi- state,
/// same-side pairs herald Psi+.
enum class HeraldChannel { opposite_1001, opposite_0110, same_1100, same_0011 };

inline constexpr std::array<HeraldChannel, 4> all_channels{
    HeraldChannel::opposite_1001, HeraldChannel::opposite_0110, HeraldChannel::same_1100,
    HeraldChannel::same_0011};

inline bool is_opposite(HeraldChannel c) {
    return c == HeraldChannel::opposite_1001 || c == HeraldChannel::opposite_0110;
}

inline const char* channel_name(HeraldChannel c) {
    switch (c) {
        case HeraldChannel::opposite_1001: return "opposite_1001";
        case HeraldChannel::opposite_0110: return "opposite_0110";
        case HeraldChannel::same_1100: return "same_1100";
        case HeraldChannel::same_0011: return "same_0011";
    }
    return "?";
}

/// Projected amplitudes of the two heralded branches: down_up multiplies
/// |down_A up_B>, up_down multiplies |up_A down_B>.
struct ChannelAmplitudes {
    double down_up = 0;
    double up_down = 0;
};

inline ChannelAmplitudes channel_amplitudes(const BeamsplitterSpec& bs, HeraldChannel c) {
    const double t = bs.transmission, r = bs.reflection;
    switch (c) {
        case HeraldChannel::opposite_1001: return {-t * t, r * r};
        case HeraldChannel::opposite_0110: return {r * r, -t * t};
        case HeraldChannel::same_1100: return {r * t, r * t};
        case HeraldChannel::same_0011: return {-r * t, -r * t};
    }
    return {};
}

/// Full protocol description: two emitters, the beamsplitter, coincidence
/// windows, the time-bin separation (0 for polarization-style encodings) and
/// the per-detector efficiency. The known offset in `windows` is the head
/// start of emitter A's excitation.
struct ProtocolSpec {
    EmitterSpec emitter_a;
    EmitterSpec emitter_b;
    BeamsplitterSpec beamsplitter;
    DetectionWindows windows;
    double timebin_T = 0;
    double detector_efficiency = 1.0;

    void validate() const {
        emitter_a.validate();
        emitter_b.validate();
        beamsplitter.validate();
        windows.validate();
        if (!(timebin_T >= 0)) throw std::invalid_argument("ProtocolSpec: timebin_T must be >= 0");
        if (!(detector_efficiency >= 0 && detector_efficiency <= 1))
            throw std::invalid_argument("ProtocolSpec: detector_efficiency must lie in [0, 1]");
    }
};

/// Heralded-state summary for one channel.
struct BellResult {
    double population_down_up = 0;
    double population_up_down = 0;
    std::complex<double> coherence{0, 0};
    double fidelity = 0;
    double herald_probability = 0;
};

struct QuadratureOptions {
    int nodes = 64;
    double tol = 1e-8;
};

/// Event-normalization prefactor chi = P_A P_B p_A p_B eps_D^2 / 4.
inline double herald_prefactor(const ProtocolSpec& spec) {
    const double eps = spec.detector_efficiency;
    return spec.emitter_a.excite_prob * spec.emitter_b.excite_prob * spec.emitter_a.collect_prob *
           spec.emitter_b.collect_prob * eps * eps / 4.0;
}

namespace detail {

/// Yield without the known-offset veto factor (it cancels in the coherence).
inline double unvetoed_yield(const ProtocolSpec& spec, int nodes = 64) {
    const double tau_a = spec.emitter_a.species.lifetime;
    const double tau_b = spec.emitter_b.species.lifetime;
    if (tau_a == tau_b) {
        DetectionWindows w = spec.windows;
        w.known_offset = 0;
        return coincidence_yield(w, tau_a);
    }
    return integrate_coincidence_window(
        spec.windows.detector_window, spec.windows.difference_window, 1.0 / tau_a, 1.0 / tau_b,
        [](double, double) { return 1.0; }, nodes);
}

} // namespace detail

/// Two-photon yield of the protocol, including the known-offset veto.
inline double protocol_yield(const ProtocolSpec& spec, int nodes = 64) {
    const double veto = std::exp(-spec.windows.known_offset / spec.emitter_a.species.lifetime);
    return veto * detail::unvetoed_yield(spec, nodes);
}

/// Closed-form herald probability of one channel.
inline double herald_probability(const ProtocolSpec& spec, HeraldChannel channel) {
    spec.validate();
    const ChannelAmplitudes c = channel_amplitudes(spec.beamsplitter, channel);
    return herald_prefactor(spec) * (c.down_up * c.down_up + c.up_down * c.up_down) *
           protocol_yield(spec);
}

namespace detail {

/// Product of thermal branch-pair overlaps over every mode of both emitters.
/// Emitter A sees its own clock, which runs ahead of the detectors by the
/// known offset; emitter B's conjugation follows from the coherence term
/// <beta^T_A | beta_A> <beta_B | beta^T_B>.
inline std::complex<double> motional_overlap_product(const ProtocolSpec& spec, double t_mu,
                                                     double t_nu) {
    const double off = spec.windows.known_offset;
    std::complex<double> m{1.0, 0.0};
    for (const auto& mode : spec.emitter_a.modes)
        m *= thermal_overlap(mode, t_mu + off, t_nu + off, spec.timebin_T);
    for (const auto& mode : spec.emitter_b.modes)
        m *= std::conj(thermal_overlap(mode, t_mu, t_nu, spec.timebin_T));
    return m;
}

/// Coherence quadrature for a caller-supplied motional factor (the rewind
/// path swaps in its own).
template <typename MotionalFn>
ConvergedIntegral<std::complex<double>> coherence_for(const ProtocolSpec& spec,
                                                      HeraldChannel channel, MotionalFn&& motion,
                                                      const QuadratureOptions& opts) {
    spec.validate();
    const double tau_a = spec.emitter_a.species.lifetime;
    const double tau_b = spec.emitter_b.species.lifetime;
    const double rate = 0.5 / tau_a + 0.5 / tau_b;
    const auto integral = integrate_coincidence_window_checked(
        spec.windows.detector_window, spec.windows.difference_window, rate, rate, motion,
        opts.nodes, opts.tol);
    const double scale = 1.0 / (rate * rate * tau_a * tau_b);
    const double y = unvetoed_yield(spec, opts.nodes);
    const ChannelAmplitudes c = channel_amplitudes(spec.beamsplitter, channel);
    const double pref = 2.0 * c.down_up * c.up_down /
                        (c.down_up * c.down_up + c.up_down * c.up_down);
    ConvergedIntegral<std::complex<double>> out;
    out.value = pref * scale * integral.value / y;
    out.error = std::abs(pref) * scale * integral.error / y;
    out.converged = integral.converged;
    return out;
}

} // namespace detail

/// Coherence C of one herald channel by 2D Gauss-Legendre quadrature of the
/// window integral, normalized by the yield. Opposite-side channels carry the
/// -2 t^2 r^2 / (t^4 + r^4) beamsplitter prefactor through the branch
/// amplitudes.
inline ConvergedIntegral<std::complex<double>> coherence_quadrature(
    const ProtocolSpec& spec, HeraldChannel channel, const QuadratureOptions& opts = {}) {
    return detail::coherence_for(
        spec, channel,
        [&spec](double t_mu, double t_nu) {
            return detail::motional_overlap_product(spec, t_mu, t_nu);
        },
        opts);
}

/// Extended channel result: the BellResult plus the quadrature error bound.
struct ChannelEstimate {
    BellResult bell;
    double quadrature_error = 0;
    bool converged = true;
};

namespace detail {

inline ChannelEstimate assemble_channel(const ProtocolSpec& spec, HeraldChannel channel,
                                        const ConvergedIntegral<std::complex<double>>& c) {
    const ChannelAmplitudes a = channel_amplitudes(spec.beamsplitter, channel);
    const double w1 = a.down_up * a.down_up, w2 = a.up_down * a.up_down;
    ChannelEstimate out;
    out.bell.population_down_up = w1 / (w1 + w2);
    out.bell.population_up_down = w2 / (w1 + w2);
    out.bell.coherence = c.value;
    out.bell.fidelity = 0.5 * (1.0 + std::abs(c.value));
    out.bell.herald_probability = herald_prefactor(spec) * (w1 + w2) * protocol_yield(spec);
    out.quadrature_error = c.error;
    out.converged = c.converged;
    return out;
}

} // namespace detail

inline ChannelEstimate estimate_channel(const ProtocolSpec& spec, HeraldChannel channel,
                                        const QuadratureOptions& opts = {}) {
    return detail::assemble_channel(spec, channel, coherence_quadrature(spec, channel, opts));
}

/// Populations, coherence, fidelity F = (1 + |C|)/2 and herald probability of
/// one channel.
inline BellResult bell_fidelity(const ProtocolSpec& spec, HeraldChannel channel,
                                const QuadratureOptions& opts = {}) {
    return estimate_channel(spec, channel, opts).bell;
}

/// Contrast loss 1 - |<exp(-i psi_net)>| from the motional overlap phases,
/// averaged over the detection-time distribution. psi_net is the net phase of
/// the coherence integrand; it cancels identically for identical emitters,
/// which is one reason the phase term is negligible against the real
/// exponential decoherence.
inline double phase_contrast_loss(const ProtocolSpec& spec, const QuadratureOptions& opts = {}) {
    spec.validate();
    const double tau_a = spec.emitter_a.species.lifetime;
    const double tau_b = spec.emitter_b.species.lifetime;
    const double rate = 0.5 / tau_a + 0.5 / tau_b;
    const double off = spec.windows.known_offset;
    const auto phase_factor = [&](double t_mu, double t_nu) {
        double psi = 0;
        for (const auto& mode : spec.emitter_a.modes)
            psi += overlap_phase(mode, t_mu + off, t_nu + off, spec.timebin_T);
        for (const auto& mode : spec.emitter_b.modes)
            psi -= overlap_phase(mode, t_mu, t_nu, spec.timebin_T);
        return std::polar(1.0, -psi);
    };
    const std::complex<double> num = integrate_coincidence_window(
        spec.windows.detector_window, spec.windows.difference_window, rate, rate, phase_factor,
        opts.nodes);
    const double den = integrate_coincidence_window(
        spec.windows.detector_window, spec.windows.difference_window, rate, rate,
        [](double, double) { return 1.0; }, opts.nodes);
    return 1.0 - std::abs(num / den);
}

/// Options for the Monte-Carlo oracle. With `rewind` set, the per-event
/// correction displacement (scaled by rewind_efficiency) is applied to every
/// motional branch before the overlaps are taken.
struct McOptions {
    std::uint64_t samples = 1000000;
    std::uint64_t seed = 1;
    bool rewind = false;
    double rewind_efficiency = 1.0;
};

/// Per-channel Monte-Carlo estimate with block standard errors.
struct McChannel {
    BellResult bell;
    double coherence_abs_se = 0;
    double fidelity_se = 0;
    double herald_probability_se = 0;
};

/// Result of one Monte-Carlo run over emission times and thermal motional
/// states. Also accounts for the same-qubit-state double detections that are
/// discarded by the coincidence logic.
struct McProtocolResult {
    std::array<McChannel, 4> channels; // indexed in all_channels order
    double yield = 0;
    double yield_se = 0;
    std::complex<double> mean_overlap{0, 0}; // E[K] over the window
    double discard_probability = 0;          // down-down + up-up events in the detector windows
    double discard_fraction = 0;             // discards / (discards + heralds)
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;

    const McChannel& channel(HeraldChannel c) const {
        return channels[static_cast<std::size_t>(c)];
    }
};

namespace detail {

/// Mergeable partial sums of one MC block. Merging blocks in index order
/// reproduces the single-pass result bit for bit.
struct McAccumulator {
    std::uint64_t n = 0;
    double in_window = 0;     // sum of 1_W
    double swap_window = 0;   // sum of 1_W * w_swap
    double det_mix = 0;       // sum of 1_det * (t^2 + r^2 w_swap)
    std::complex<double> k_sum{0, 0}; // sum of 1_W * K * w_coh

    void merge(const McAccumulator& o) {
        n += o.n;
        in_window += o.in_window;
        swap_window += o.swap_window;
        det_mix += o.det_mix;
        k_sum += o.k_sum;
    }
};

inline std::complex<double> branch_pair_overlap(const ModeSpec& mode, CoherentAmplitude alpha,
                                                double t_early, double t_late, double T,
                                                bool rewind, double rewind_efficiency) {
    DisplacedState early = recoil_state(mode, alpha, t_early, T, RecoilBranch::early);
    DisplacedState late = recoil_state(mode, alpha, t_late, T, RecoilBranch::late);
    if (rewind) {
        early = displace(early, rewind_efficiency *
                                    recoil_rewind_argument(mode, t_early, T, RecoilBranch::early));
        late = displace(late, rewind_efficiency *
                                  recoil_rewind_argument(mode, t_late, T, RecoilBranch::late));
    }
    return std::polar(1.0, early.accumulated_phase - late.accumulated_phase) *
           overlap(late.amplitude, early.amplitude);
}

} // namespace detail

/// Independent Monte-Carlo oracle. Emission times are drawn from the exact
/// exponential densities (emitter A shifted by the known offset), initial
/// amplitudes from the thermal Glauber-P distribution, and the conditional
/// 2x2 qubit density matrix is accumulated from exact displacement chains and
/// coherent-state overlaps. The estimator for C is a ratio estimator with
/// importance weights of the exact integrand over the sampling density; the
/// seed fully determines the stream.
inline McProtocolResult mc_protocol(const ProtocolSpec& spec, const McOptions& opts) {
    spec.validate();
    if (opts.samples < 1) throw std::invalid_argument("mc_protocol: samples must be >= 1");

    const double tau_a = spec.emitter_a.species.lifetime;
    const double tau_b = spec.emitter_b.species.lifetime;
    const double off = spec.windows.known_offset;
    const double t_d = spec.windows.detector_window;
    const double t_delta = spec.windows.difference_window;
    const double T = spec.timebin_T;
    const double t2 = spec.beamsplitter.transmission * spec.beamsplitter.transmission;
    const double r2 = spec.beamsplitter.reflection * spec.beamsplitter.reflection;
    const bool equal_tau = (tau_a == tau_b);

    constexpr std::uint64_t block_size = 4096;
    const std::uint64_t n_blocks = (opts.samples + block_size - 1) / block_size;
    std::vector<detail::McAccumulator> blocks(n_blocks);

    for (std::uint64_t b = 0; b < n_blocks; ++b) {
        detail::McAccumulator& acc = blocks[b];
        const std::uint64_t begin = b * block_size;
        const std::uint64_t end = std::min(opts.samples, begin + block_size);
        for (std::uint64_t i = begin; i < end; ++i) {
            SampleRng rng(opts.seed, i);
            // Emitter A's own clock runs ahead of the detector windows by the
            // known offset; detector times are s = t_own - offset.
            const double e_a = rng.exponential(tau_a);
            const double s_mu = e_a - off;
            const double s_nu = rng.exponential(tau_b);

            // Importance weights of the swapped branch and of the coherence
            // integrand relative to the sampling density; both are 1 for
            // equal lifetimes.
            // f_A(s_nu)^2 f_B(s_mu)^2 / q and f_A f_B f_A f_B / q; the
            // known-offset factors cancel in both ratios.
            double w_swap = 1.0, w_coh = 1.0;
            if (!equal_tau) {
                const double d = (s_nu - s_mu) * (1.0 / tau_b - 1.0 / tau_a);
                w_swap = std::exp(d);
                w_coh = std::exp(0.5 * d);
            }

            const bool in_det = (s_mu >= 0 && s_mu <= t_d && s_nu >= 0 && s_nu <= t_d);
            const bool in_window = in_det && std::abs(s_nu - s_mu) <= t_delta;

            acc.n += 1;
            if (in_det) acc.det_mix += t2 + r2 * w_swap;
            if (!in_window) continue;
            acc.in_window += 1.0;
            acc.swap_window += w_swap;

            std::complex<double> k{1.0, 0.0};
            for (const auto& mode : spec.emitter_a.modes) {
                const double sigma = std::sqrt(0.5 * mode.nbar);
                const CoherentAmplitude alpha{rng.normal(sigma), rng.normal(sigma)};
                k *= detail::branch_pair_overlap(mode, alpha, s_mu + off, s_nu + off, T,
                                                 opts.rewind, opts.rewind_efficiency);
            }
            for (const auto& mode : spec.emitter_b.modes) {
                const double sigma = std::sqrt(0.5 * mode.nbar);
                const CoherentAmplitude alpha{rng.normal(sigma), rng.normal(sigma)};
                k *= std::conj(detail::branch_pair_overlap(mode, alpha, s_mu, s_nu, T,
                                                           opts.rewind, opts.rewind_efficiency));
            }
            acc.k_sum += k * w_coh;
        }
    }

    detail::McAccumulator total;
    for (const auto& b : blocks) total.merge(b);

    const double n = static_cast<double>(total.n);
    const double chi = herald_prefactor(spec);
    const double y_hat = total.in_window / n;
    const double y_swap = total.swap_window / n;
    const std::complex<double> k_mean =
        total.in_window > 0 ? total.k_sum / total.in_window : std::complex<double>{0, 0};

    McProtocolResult result;
    result.samples = opts.samples;
    result.seed = opts.seed;
    result.yield = y_hat;
    result.mean_overlap = k_mean;
    const double discard = 2.0 * chi * total.det_mix / n;
    result.discard_probability = discard;

    double herald_total = 0;
    for (std::size_t ci = 0; ci < all_channels.size(); ++ci) {
        const HeraldChannel ch = all_channels[ci];
        const ChannelAmplitudes a = channel_amplitudes(spec.beamsplitter, ch);
        const double w1 = a.down_up * a.down_up, w2 = a.up_down * a.up_down;
        const double denom = w1 * y_hat + w2 * y_swap;
        McChannel& out = result.channels[ci];
        if (denom > 0) {
            out.bell.population_down_up = w1 * y_hat / denom;
            out.bell.population_up_down = w2 * y_swap / denom;
            out.bell.coherence = 2.0 * a.down_up * a.up_down * (total.k_sum / n) / denom;
        }
        out.bell.fidelity = 0.5 * (1.0 + std::abs(out.bell.coherence));
        out.bell.herald_probability = chi * denom;
        herald_total += out.bell.herald_probability;
    }
    if (discard + herald_total > 0) result.discard_fraction = discard / (discard + herald_total);

    // Block-spread standard errors (ratio estimator evaluated per block).
    const std::uint64_t full_blocks = opts.samples / block_size;
    if (full_blocks >= 2) {
        std::vector<double> ys(full_blocks);
        std::array<std::vector<double>, 4> cproj;
        for (auto& v : cproj) v.resize(full_blocks);
        for (std::uint64_t b = 0; b < full_blocks; ++b) {
            const auto& blk = blocks[b];
            const double bn = static_cast<double>(blk.n);
            ys[b] = blk.in_window / bn;
            for (std::size_t ci = 0; ci < all_channels.size(); ++ci) {
                const ChannelAmplitudes a = channel_amplitudes(spec.beamsplitter, all_channels[ci]);
                const double w1 = a.down_up * a.down_up, w2 = a.up_down * a.up_down;
                const double denom = w1 * blk.in_window / bn + w2 * blk.swap_window / bn;
                const std::complex<double> cb =
                    denom > 0 ? 2.0 * a.down_up * a.up_down * (blk.k_sum / bn) / denom
                              : std::complex<double>{0, 0};
                // project the block coherence onto the global direction
                const std::complex<double> cg = result.channels[ci].bell.coherence;
                const double mag = std::abs(cg);
                cproj[ci][b] = mag > 0 ? (cb.real() * cg.real() + cb.imag() * cg.imag()) / mag
                                       : std::abs(cb);
            }
        }
        const auto se_of = [&](const std::vector<double>& v) {
            double mean = 0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            double var = 0;
            for (double x : v) var += (x - mean) * (x - mean);
            var /= static_cast<double>(v.size() - 1);
            return std::sqrt(var / static_cast<double>(v.size()));
        };
        result.yield_se = se_of(ys);
        for (std::size_t ci = 0; ci < all_channels.size(); ++ci) {
            McChannel& out = result.channels[ci];
            out.coherence_abs_se = se_of(cproj[ci]);
            out.fidelity_se = 0.5 * out.coherence_abs_se;
            const ChannelAmplitudes a = channel_amplitudes(spec.beamsplitter, all_channels[ci]);
            out.herald_probability_se =
                chi * (a.down_up * a.down_up + a.up_down * a.up_down) * result.yield_se;
        }
    }
    return result;
}

} // namespace herald
