#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "herald/atoms.hpp"

namespace herald {

/// Dimensionless phase-space amplitude of one motional mode.
using CoherentAmplitude = std::complex<double>;

/// Coherent state together with the phase accumulated along its displacement
/// chain: D[xi]|alpha> = exp(i Im(xi alpha*)) |alpha + xi>.
struct DisplacedState {
    CoherentAmplitude amplitude{0.0, 0.0};
    double accumulated_phase = 0.0;
};

/// Which recoil history a motional state belongs to: the early time bin
/// (qubit down, photon mu) or the late one (qubit up, photon nu).
enum class RecoilBranch { early, late };

inline DisplacedState displace(const DisplacedState& state, CoherentAmplitude xi) {
    return {state.amplitude + xi,
            state.accumulated_phase + std::imag(xi * std::conj(state.amplitude))};
}

/// Coherent-state inner product <a|b>; |result| = exp(-|a-b|^2 / 2) <= 1.
inline std::complex<double> overlap(CoherentAmplitude a, CoherentAmplitude b) {
    return std::exp(-0.5 * std::norm(a) - 0.5 * std::norm(b) + std::conj(a) * b);
}

/// Motional state after excitation and emission recoil. The early branch is
/// kicked at t = 0 and emits at t; the late branch is kicked at T (so the
/// excitation displacement has rotated by omega T) and emits at t + T. Phases
/// are tracked through the displacement chain.
inline DisplacedState recoil_state(const ModeSpec& mode, CoherentAmplitude alpha, double t,
                                   double T, RecoilBranch branch) {
    if (!(t >= 0)) throw std::invalid_argument("recoil_state: t must be >= 0");
    if (!(T >= 0)) throw std::invalid_argument("recoil_state: T must be >= 0");
    const std::complex<double> i{0.0, 1.0};
    const double omega = mode.frequency;
    DisplacedState s{alpha, 0.0};
    if (branch == RecoilBranch::early) {
        s = displace(s, i * mode.eta_exc);
        s = displace(s, -i * mode.eta_emit * std::exp(i * (omega * t)));
    } else {
        s = displace(s, i * mode.eta_exc * std::exp(i * (omega * T)));
        s = displace(s, -i * mode.eta_emit * std::exp(i * (omega * (t + T))));
    }
    return s;
}

/// Displacement that undoes the recoil chain of a branch, returning its
/// amplitude to the initial alpha (minus the chain's total displacement).
inline CoherentAmplitude recoil_rewind_argument(const ModeSpec& mode, double t, double T,
                                                RecoilBranch branch) {
    if (!(t >= 0) || !(T >= 0))
        throw std::invalid_argument("recoil_rewind_argument: times must be >= 0");
    const std::complex<double> i{0.0, 1.0};
    const double omega = mode.frequency;
    if (branch == RecoilBranch::early)
        return i * mode.eta_emit * std::exp(i * (omega * t)) - i * mode.eta_exc;
    return i * mode.eta_emit * std::exp(i * (omega * (t + T))) -
           i * mode.eta_exc * std::exp(i * (omega * T));
}

/// Decoherence exponent Z = |beta_late(t_nu) - beta_early(t_mu)|^2 / 2,
/// written in closed trigonometric form. Independent of the initial alpha.
/// Half-angle products keep the evaluation cancellation-free:
///   Z = 2 [eta' s_T - eta s_d]^2 + 8 eta' eta s_T s_d sin^2(omega t_sigma / 4)
/// with s_T = sin(omega T / 2) and s_d = sin(omega (T + t_nu - t_mu) / 2).
inline double decoherence_exponent(const ModeSpec& mode, double t_mu, double t_nu, double T) {
    if (!(t_mu >= 0) || !(t_nu >= 0) || !(T >= 0))
        throw std::invalid_argument("decoherence_exponent: times must be >= 0");
    const double w = mode.frequency;
    const double e = mode.eta_emit, ep = mode.eta_exc;
    const double s_t = std::sin(0.5 * w * T);
    const double s_d = std::sin(0.5 * w * (T + t_nu - t_mu));
    const double s_sum = std::sin(0.25 * w * (t_nu + t_mu));
    const double diff = ep * s_t - e * s_d;
    return 2.0 * diff * diff + 8.0 * ep * e * s_t * s_d * s_sum * s_sum;
}

/// Phase of the branch-pair overlap; independent of the initial motional state.
inline double overlap_phase(const ModeSpec& mode, double t_mu, double t_nu, double T) {
    if (!(t_mu >= 0) || !(t_nu >= 0) || !(T >= 0))
        throw std::invalid_argument("overlap_phase: times must be >= 0");
    const double w = mode.frequency;
    const double e = mode.eta_emit, ep = mode.eta_exc;
    return ep * ep * std::sin(w * T) + e * e * std::sin(w * (T + t_nu - t_mu)) -
           ep * e * (std::sin(w * (T + t_nu)) + std::sin(w * t_nu) +
                     std::sin(w * (T - t_mu)) - std::sin(w * t_mu));
}

/// Quadratic-in-time approximation of the decoherence exponent, valid for
/// omega * t << 1 with arbitrary T. Terms odd in t_delta are dropped (they
/// cancel under the symmetric detection-time distribution).
inline double decoherence_exponent_quadratic(const ModeSpec& mode, double t_sigma, double t_delta,
                                             double T) {
    const double w = mode.frequency;
    const double e = mode.eta_emit, ep = mode.eta_exc;
    const double c = std::cos(w * T);
    const double d = e - ep;
    return d * d * (1.0 - c) + 0.25 * ep * e * (1.0 - c) * w * w * t_sigma * t_sigma +
           (0.25 * e * ep * (1.0 - c) + 0.5 * e * e * c) * w * w * t_delta * t_delta;
}

/// Decoherence exponent for near-commensurate time bins,
/// omega T = 2 pi N + omega T_tilde with omega T_tilde << 1 (documented, not
/// enforced).
inline double decoherence_exponent_commensurate(const ModeSpec& mode, double t_sigma,
                                                double t_delta, double T_tilde) {
    const double w = mode.frequency;
    const double e = mode.eta_emit, ep = mode.eta_exc;
    const double d = e - ep;
    return 0.5 * (d * d + 0.25 * ep * e * w * w * t_sigma * t_sigma) * w * w * T_tilde * T_tilde +
           0.5 * e * e * w * w * t_delta * t_delta;
}

/// Thermal branch-pair overlap <beta_late(t_nu)|beta_early(t_mu)> averaged
/// over a thermal Glauber-P distribution of the initial state:
/// exp(-i psi) exp(-(2 nbar + 1) Z).
inline std::complex<double> thermal_overlap(const ModeSpec& mode, double t_mu, double t_nu,
                                            double T) {
    if (!(mode.nbar >= 0)) throw std::invalid_argument("thermal_overlap: nbar must be >= 0");
    const double z = decoherence_exponent(mode, t_mu, t_nu, T);
    const double psi = overlap_phase(mode, t_mu, t_nu, T);
    return std::polar(std::exp(-(2.0 * mode.nbar + 1.0) * z), -psi);
}

/// Thermal average of <late|early> for two displacement chains evaluated at
/// alpha = 0. Each chain is alpha-exactly e^{i(theta0 + Im(u alpha*))}|alpha+u>,
/// so the Gaussian alpha-average contributes exp(-nbar |u_e - u_l|^2) on top of
/// the pure-state overlap. Used by the rewind path, where the chains include
/// the correction displacements.
inline std::complex<double> thermal_pair_overlap(double nbar, const DisplacedState& early_at_zero,
                                                 const DisplacedState& late_at_zero) {
    const CoherentAmplitude u = early_at_zero.amplitude;
    const CoherentAmplitude v = late_at_zero.amplitude;
    const std::complex<double> pure =
        std::polar(1.0, early_at_zero.accumulated_phase - late_at_zero.accumulated_phase) *
        overlap(v, u);
    return pure * std::exp(-nbar * std::norm(u - v));
}

} // namespace herald
