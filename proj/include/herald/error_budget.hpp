#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "herald/atoms.hpp"
#include "herald/temporal.hpp"

namespace herald {

/// Overall constant of the random-emission error, written as
/// 2E = kappa * W * omega^R * tau (two-emitter Doppler-limit total).
/// The printed closed form and the tabulated values disagree by a factor of 4;
/// the exact window average sits between them at kappa = 1, which is what the
/// quadrature/Monte-Carlo oracle measures. `table` reproduces the tabulated
/// values and is the default.
enum class KappaConvention { table, printed_eq37, oracle };

inline double kappa_value(KappaConvention c) {
    switch (c) {
        case KappaConvention::table: return 0.5;
        case KappaConvention::printed_eq37: return 2.0;
        case KappaConvention::oracle: return 1.0;
    }
    throw std::invalid_argument("kappa_value: unknown convention");
}

inline const char* kappa_name(KappaConvention c) {
    switch (c) {
        case KappaConvention::table: return "table";
        case KappaConvention::printed_eq37: return "printed-eq37";
        case KappaConvention::oracle: return "oracle";
    }
    return "?";
}

inline KappaConvention kappa_from_name(const std::string& name) {
    if (name == "table") return KappaConvention::table;
    if (name == "printed-eq37") return KappaConvention::printed_eq37;
    if (name == "oracle") return KappaConvention::oracle;
    throw std::invalid_argument("unknown kappa convention '" + name + "'");
}

/// Per-mode time-bin asynchronous error (2 nbar + 1)(eta - eta')^2 (omega T~)^2 / 4.
/// Vanishes for commensurate bins (T~ = 0) and for equal recoil kicks.
inline double timebin_error(const ModeSpec& mode, double T_tilde) {
    mode.validate();
    const double d = mode.eta_emit - mode.eta_exc;
    const double wt = mode.frequency * T_tilde;
    return 0.25 * (2.0 * mode.nbar + 1.0) * d * d * wt * wt;
}

inline double timebin_error(const std::vector<ModeSpec>& modes, double T_tilde) {
    double sum = 0;
    for (const auto& m : modes) sum += timebin_error(m, T_tilde);
    return sum;
}

/// Per-mode random-emission-time error, proportional to
/// (2 nbar + 1) eta^2 omega^2 tau^2 W(w) with the overall constant set by the
/// kappa convention (kappa / 2 in this general form).
inline double random_emission_error(const ModeSpec& mode, double lifetime, double w,
                                    KappaConvention convention = KappaConvention::table) {
    mode.validate();
    if (!(lifetime > 0)) throw std::invalid_argument("random_emission_error: lifetime must be positive");
    const double coeff = 0.5 * kappa_value(convention);
    const double eta_omega_tau = mode.eta_emit * mode.frequency * lifetime;
    return coeff * (2.0 * mode.nbar + 1.0) * eta_omega_tau * eta_omega_tau *
           window_variance_factor(w);
}

/// Doppler-limit errors for two identical emitters under the single-direction
/// recoil convention |k - k'| = |k|. Returned values are the reported two-atom
/// totals: 2E^T = l^2 omega^DR tau / 2 and 2E^R = kappa W omega^R tau.
struct DopplerErrors {
    double timebin = 0; // 2E^T
    double random = 0;  // 2E^R
};

inline DopplerErrors doppler_errors(const Species& species, double ell, double w,
                                    KappaConvention convention = KappaConvention::table) {
    if (!(ell > 0)) throw std::invalid_argument("doppler_errors: ell must be positive");
    const double x = recoil_frequency(species) * species.lifetime;
    DopplerErrors e;
    e.timebin = 0.5 * ell * ell * x;
    e.random = kappa_value(convention) * window_variance_factor(w) * x;
    return e;
}

/// Additional fidelity error from the overlap of the two time bins when the
/// separation is l lifetimes: e^{-l}.
inline double timebin_overlap_error(double ell) {
    if (!(ell >= 0)) throw std::invalid_argument("timebin_overlap_error: ell must be >= 0");
    return std::exp(-ell);
}

/// Time-bin length l* (in lifetimes) balancing photonic distinguishability
/// against asynchronous recoil: e^{-l} = l^2 omega^DR tau / 2, solved by
/// bisection on [0.1, 60] to |residual| <= 1e-12. The residual is strictly
/// decreasing, so the root is unique.
inline double solve_timebin_length(const Species& species) {
    species.validate();
    const double x = recoil_frequency(species) * species.lifetime;
    const auto residual = [x](double ell) { return std::exp(-ell) - 0.5 * ell * ell * x; };
    double lo = 0.1, hi = 60.0;
    if (!(residual(lo) > 0) || !(residual(hi) < 0))
        throw std::domain_error("solve_timebin_length: no root in [0.1, 60] for " + species.name);
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (residual(mid) > 0 ? lo : hi) = mid;
    }
    const double ell = 0.5 * (lo + hi);
    if (std::abs(residual(ell)) > 1e-12)
        throw std::domain_error("solve_timebin_length: bisection failed to reach tolerance");
    return ell;
}

/// One row of the built-in error-budget table.
struct ErrorBudgetRow {
    std::string species_label;
    double recoil_frequency_kHz = 0; // omega^R / 2pi, unrounded
    double timebin_error = 0;        // 2E^T
    double random_error = 0;         // 2E^R
    double timebin_length_ell = 0;   // l*
    KappaConvention convention = KappaConvention::table;
};

/// Error budget for the twelve built-in species: recoil frequency, the
/// fixed-point time-bin length and both Doppler-limit errors.
inline std::vector<ErrorBudgetRow> error_budget_table(double w = 2.0,
                                                      KappaConvention convention = KappaConvention::table) {
    std::vector<ErrorBudgetRow> rows;
    rows.reserve(builtin_species().size());
    for (const auto& s : builtin_species()) {
        ErrorBudgetRow row;
        row.species_label = s.name;
        row.recoil_frequency_kHz = recoil_frequency(s) / two_pi / 1e3;
        row.timebin_length_ell = solve_timebin_length(s);
        const DopplerErrors e = doppler_errors(s, row.timebin_length_ell, w, convention);
        row.timebin_error = e.timebin;
        row.random_error = e.random;
        row.convention = convention;
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace herald
