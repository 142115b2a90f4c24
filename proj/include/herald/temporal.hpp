#pragma once

#include <cmath>
#include <stdexcept>

namespace herald {

/// Coincidence-window geometry. detector_window (T_D) bounds each detection
/// time, difference_window (T_Delta) bounds |t_nu - t_mu|, and known_offset
/// (delta t_0) is a known excitation/path imbalance vetoed by delaying the
/// window starts. Infinite windows are allowed.
struct DetectionWindows {
    double detector_window = 0;   // s
    double difference_window = 0; // s
    double known_offset = 0;      // s

    void validate() const {
        if (!(difference_window > 0) || !(difference_window <= detector_window))
            throw std::invalid_argument("DetectionWindows: need 0 < T_Delta <= T_D");
        if (!(known_offset >= 0))
            throw std::invalid_argument("DetectionWindows: known_offset must be >= 0");
    }
};

/// Exponentially decaying wavepacket amplitude e^{-t/2tau}/sqrt(tau) for
/// t >= 0, zero before the excitation pulse. Normalized: integral of f^2 is 1.
inline double wavepacket(double t, double lifetime) {
    if (!(lifetime > 0)) throw std::invalid_argument("wavepacket: lifetime must be positive");
    if (t < 0) return 0.0;
    return std::exp(-t / (2.0 * lifetime)) / std::sqrt(lifetime);
}

/// Probability that both detections land inside the coincidence window. For
/// the exponential wavepacket the known-offset veto factorizes exactly into
/// e^{-dt0/tau}. Handles infinite windows as limits.
inline double coincidence_yield(const DetectionWindows& w, double lifetime) {
    w.validate();
    if (!(lifetime > 0)) throw std::invalid_argument("coincidence_yield: lifetime must be positive");
    const double tau = lifetime;
    const double ed = std::isinf(w.difference_window) ? 0.0 : std::exp(-w.difference_window / tau);
    double y;
    if (std::isinf(w.detector_window)) {
        y = 1.0 - ed;
    } else {
        y = 1.0 - ed - std::exp(-(2.0 * w.detector_window - w.difference_window) / tau) +
            std::exp(-2.0 * w.detector_window / tau);
    }
    return y * std::exp(-w.known_offset / tau);
}

/// Normalized variance of the detection-time difference over |t_delta| <= w*tau:
/// <t_delta^2> = 2 tau^2 W(w). Rises smoothly from 0 to 1; the w -> 0 limit is
/// taken analytically.
inline double window_variance_factor(double w) {
    if (!(w >= 0)) throw std::invalid_argument("window_variance_factor: w must be >= 0");
    if (std::isinf(w)) return 1.0;
    if (w < 1e-5) return w * w / 6.0; // leading term of the 0/0 limit
    const double ew = std::exp(-w);
    return (1.0 - (1.0 + w + 0.5 * w * w) * ew) / (1.0 - ew);
}

} // namespace herald
