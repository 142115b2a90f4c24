#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "herald/constants.hpp"

namespace herald {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline void require_unit(const Vec3& v, const char* what) {
    if (std::abs(norm(v) - 1.0) > 1e-9)
        throw std::invalid_argument(std::string(what) + ": direction must be unit-norm");
}

/// Atomic species: mass, transition wavelength and excited-state lifetime.
/// All fields are SI; conversion from amu/nm/ns happens at the I/O boundary.
struct Species {
    std::string name;
    double mass = 0;       // kg
    double wavelength = 0; // m
    double lifetime = 0;   // s

    void validate() const {
        if (!(mass > 0) || !(wavelength > 0) || !(lifetime > 0))
            throw std::invalid_argument("Species '" + name + "': mass, wavelength and lifetime must be positive");
    }
};

inline Species make_species(std::string name, double mass_amu, double wavelength_nm, double lifetime_ns) {
    Species s{std::move(name), mass_amu * atomic_mass_unit, wavelength_nm * 1e-9, lifetime_ns * 1e-9};
    s.validate();
    return s;
}

inline double wavenumber(const Species& s) { return two_pi / s.wavelength; }

/// Emission recoil frequency hbar (k b_proj)^2 / 2m for a given projection of
/// the emission wavevector onto a mode axis.
inline double recoil_frequency(const Species& s, double projection = 1.0) {
    if (std::abs(projection) > 1.0 + 1e-12)
        throw std::invalid_argument("recoil_frequency: |projection| must be <= 1");
    const double k = wavenumber(s) * projection;
    return hbar * k * k / (2.0 * s.mass);
}

/// Differential recoil frequency hbar [(k_emit - k_exc) . axis]^2 b^2 / 2m.
/// Both wavevectors carry magnitude 2 pi / lambda.
inline double differential_recoil_frequency(const Species& s, const Vec3& k_emit_dir,
                                            const Vec3& k_exc_dir, const Vec3& mode_axis,
                                            double participation = 1.0) {
    require_unit(k_emit_dir, "k_emit");
    require_unit(k_exc_dir, "k_exc");
    require_unit(mode_axis, "mode_axis");
    const Vec3 diff{k_emit_dir[0] - k_exc_dir[0], k_emit_dir[1] - k_exc_dir[1],
                    k_emit_dir[2] - k_exc_dir[2]};
    const double dk = wavenumber(s) * dot(diff, mode_axis) * participation;
    return hbar * dk * dk / (2.0 * s.mass);
}

/// Lamb-Dicke parameter k * projection * participation * sqrt(hbar / 2 m omega).
/// Signed: a negative projection gives a negative eta.
inline double lamb_dicke(const Species& s, double frequency, double projection,
                         double participation = 1.0) {
    if (!(frequency > 0)) throw std::invalid_argument("lamb_dicke: frequency must be positive");
    return wavenumber(s) * projection * participation * std::sqrt(hbar / (2.0 * s.mass * frequency));
}

/// Doppler-limit thermal occupation 1 / (2 omega tau).
inline double doppler_occupation(double frequency, double lifetime) {
    if (!(frequency > 0) || !(lifetime > 0))
        throw std::invalid_argument("doppler_occupation: frequency and lifetime must be positive");
    return 1.0 / (2.0 * frequency * lifetime);
}

/// One motional mode of one emitter. eta_emit / eta_exc are the emission and
/// excitation Lamb-Dicke parameters along this mode (signed projections).
struct ModeSpec {
    double frequency = 0;      // rad/s
    double nbar = 0;           // thermal occupation
    double eta_emit = 0;       // emission Lamb-Dicke parameter
    double eta_exc = 0;        // excitation Lamb-Dicke parameter
    double participation = 1;  // normal-mode participation b

    void validate() const {
        if (!(frequency > 0)) throw std::invalid_argument("ModeSpec: frequency must be positive");
        if (!(nbar >= 0)) throw std::invalid_argument("ModeSpec: nbar must be >= 0");
        if (std::abs(participation) > 1.0 + 1e-12)
            throw std::invalid_argument("ModeSpec: |participation| must be <= 1");
    }
};

/// Build a mode from species data and wavevector projections onto the mode axis.
inline ModeSpec make_mode(const Species& s, double frequency, double nbar, double emit_projection,
                          double exc_projection, double participation = 1.0) {
    ModeSpec m;
    m.frequency = frequency;
    m.nbar = nbar;
    m.eta_emit = lamb_dicke(s, frequency, emit_projection, participation);
    m.eta_exc = lamb_dicke(s, frequency, exc_projection, participation);
    m.participation = participation;
    m.validate();
    return m;
}

/// One atomic emitter: species constants, wavevector geometry, mode list and
/// the excitation / collection probabilities of the entanglement attempt.
struct EmitterSpec {
    Species species;
    std::vector<ModeSpec> modes;
    Vec3 k_emit_direction{1, 0, 0};
    Vec3 k_exc_direction{0, 1, 0};
    double excite_prob = 1.0;
    double collect_prob = 1.0;

    void validate() const {
        species.validate();
        for (const auto& m : modes) m.validate();
        require_unit(k_emit_direction, "EmitterSpec.k_emit_direction");
        require_unit(k_exc_direction, "EmitterSpec.k_exc_direction");
        if (!(excite_prob >= 0 && excite_prob <= 1) || !(collect_prob >= 0 && collect_prob <= 1))
            throw std::invalid_argument("EmitterSpec: probabilities must lie in [0, 1]");
    }
};

/// Default single-mode emitter with the mode axis along the emission direction
/// and the excitation beam perpendicular to it. In this geometry the emission
/// projection is 1 and the excitation projection is 0, so the differential
/// recoil equals the plain recoil frequency (|k - k'| = |k|).
inline EmitterSpec make_default_emitter(const Species& s, double frequency, double nbar) {
    EmitterSpec e;
    e.species = s;
    e.k_emit_direction = {1, 0, 0};
    e.k_exc_direction = {0, 1, 0};
    e.modes.push_back(make_mode(s, frequency, nbar, 1.0, 0.0, 1.0));
    e.validate();
    return e;
}

/// The twelve built-in species used by the error-budget table, in table order.
inline const std::vector<Species>& builtin_species() {
    static const std::vector<Species> table = {
        make_species("9Be+@313", 9, 313, 8.2),
        make_species("40Ca+@397", 40, 397, 6.8),
        make_species("40Ca+@866", 40, 866, 6.8),
        make_species("87Rb@780", 87, 780, 26),
        make_species("88Sr+@422", 88, 422, 7.8),
        make_species("88Sr+@1092", 88, 1092, 7.8),
        make_species("88Sr@461", 88, 461, 5.3),
        make_species("138Ba+@493", 138, 493, 7.9),
        make_species("138Ba+@650", 138, 650, 7.9),
        make_species("171Yb+@369", 171, 369, 8.1),
        make_species("171Yb@399", 171, 399, 5.5),
        make_species("171Yb@1389", 171, 1389, 330),
    };
    return table;
}

inline const Species& find_species(const std::string& name) {
    for (const auto& s : builtin_species())
        if (s.name == name) return s;
    throw std::out_of_range("unknown species '" + name + "'");
}

/// Check that the participation rows of a mode matrix are orthonormal:
/// sum over emitters q of b_{qi}^2 == 1 for every mode i.
inline void validate_participation_matrix(const std::vector<std::vector<double>>& b_by_emitter,
                                          double tol = 1e-9) {
    if (b_by_emitter.empty()) return;
    const std::size_t n_modes = b_by_emitter.front().size();
    for (const auto& row : b_by_emitter)
        if (row.size() != n_modes)
            throw std::invalid_argument("participation matrix: ragged rows");
    for (std::size_t i = 0; i < n_modes; ++i) {
        double sum = 0;
        for (const auto& row : b_by_emitter) sum += row[i] * row[i];
        if (std::abs(sum - 1.0) > tol)
            throw std::invalid_argument("participation matrix: mode " + std::to_string(i) +
                                        " not normalized (sum b^2 = " + std::to_string(sum) + ")");
    }
}

} // namespace herald
