#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "herald/error_budget.hpp"
#include "herald/herald_engine.hpp"

namespace herald {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SweepSpec {
    std::string name;
    std::vector<double> values;
};

struct McSettings {
    std::uint64_t samples = 1000000;
    std::uint64_t seed = 1;
    bool rewind = false;
    double rewind_efficiency = 1.0;
};

struct OutputSpec {
    std::string format = "json"; // csv | json | markdown
    std::string path;            // empty = stdout
};

/// Parsed run configuration: protocol in SI units plus optional sweep and
/// Monte-Carlo sections.
struct RunConfig {
    ProtocolSpec protocol;
    std::optional<SweepSpec> sweep;
    std::optional<McSettings> mc;
    OutputSpec output;
};

namespace detail {

using nlohmann::json;

/// Unknown keys are configuration errors, not warnings: a silent typo in a
/// physics parameter is worse than a hard failure.
inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& context) {
    if (!j.is_object()) throw ConfigError(context + ": expected an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) { ok = true; break; }
        if (!ok) throw ConfigError(context + ": unknown key '" + item.key() + "'");
    }
}

inline double require_number(const json& j, const char* key, const std::string& context) {
    if (!j.contains(key)) throw ConfigError(context + ": missing key '" + key + "'");
    if (!j[key].is_number()) throw ConfigError(context + ": '" + key + "' must be a number");
    return j[key].get<double>();
}

inline double number_or(const json& j, const char* key, double fallback,
                        const std::string& context) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(context + ": '" + key + "' must be a number");
    return j[key].get<double>();
}

/// A window length: a number in ns or the string "inf".
inline double window_ns(const json& v, const std::string& context) {
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw ConfigError(context + ": only \"inf\" is accepted as a string value");
    }
    if (!v.is_number()) throw ConfigError(context + ": expected a number (ns) or \"inf\"");
    return v.get<double>() * 1e-9;
}

inline Vec3 parse_direction(const json& v, const std::string& context) {
    if (!v.is_array() || v.size() != 3) throw ConfigError(context + ": expected [x, y, z]");
    Vec3 d{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
    if (std::abs(norm(d) - 1.0) > 1e-9)
        throw ConfigError(context + ": direction must be unit-norm within 1e-9");
    return d;
}

inline double to_rad_per_s(double frequency_kHz, const std::string& unit,
                           const std::string& context) {
    if (unit == "Hz_linear") return frequency_kHz * 1e3 * two_pi;
    if (unit == "rad_per_s") return frequency_kHz * 1e3;
    throw ConfigError(context + ": frequency_unit must be \"Hz_linear\" or \"rad_per_s\"");
}

inline Species parse_species(const json& v, const std::vector<Species>& registry,
                             const std::string& context) {
    if (v.is_string()) {
        const std::string name = v.get<std::string>();
        for (const auto& s : registry)
            if (s.name == name) return s;
        try {
            return find_species(name);
        } catch (const std::out_of_range&) {
            throw ConfigError(context + ": unknown species '" + name + "'");
        }
    }
    check_keys(v, {"name", "mass_amu", "wavelength_nm", "lifetime_ns"}, context);
    return make_species(v.contains("name") ? v["name"].get<std::string>() : "custom",
                        require_number(v, "mass_amu", context),
                        require_number(v, "wavelength_nm", context),
                        require_number(v, "lifetime_ns", context));
}

inline EmitterSpec parse_emitter(const json& v, const std::vector<Species>& registry,
                                 const std::string& unit, const std::string& context) {
    check_keys(v,
               {"species", "excite_prob", "collect_prob", "k_emit_direction", "k_exc_direction",
                "modes"},
               context);
    if (!v.contains("species")) throw ConfigError(context + ": missing key 'species'");
    EmitterSpec e;
    e.species = parse_species(v["species"], registry, context + ".species");
    e.excite_prob = number_or(v, "excite_prob", 1.0, context);
    e.collect_prob = number_or(v, "collect_prob", 1.0, context);
    if (v.contains("k_emit_direction"))
        e.k_emit_direction = parse_direction(v["k_emit_direction"], context + ".k_emit_direction");
    if (v.contains("k_exc_direction"))
        e.k_exc_direction = parse_direction(v["k_exc_direction"], context + ".k_exc_direction");

    if (!v.contains("modes") || !v["modes"].is_array() || v["modes"].empty())
        throw ConfigError(context + ": 'modes' must be a non-empty array");
    std::size_t idx = 0;
    for (const auto& mv : v["modes"]) {
        const std::string mctx = context + ".modes[" + std::to_string(idx++) + "]";
        check_keys(mv,
                   {"frequency_kHz", "nbar", "axis", "participation", "eta_emit", "eta_exc"},
                   mctx);
        if (unit.empty())
            throw ConfigError(mctx + ": modes present but top-level 'frequency_unit' missing");
        const double omega = to_rad_per_s(require_number(mv, "frequency_kHz", mctx), unit, mctx);
        double nbar;
        if (mv.contains("nbar") && mv["nbar"].is_string()) {
            if (mv["nbar"].get<std::string>() != "doppler")
                throw ConfigError(mctx + ": nbar must be a number or \"doppler\"");
            nbar = doppler_occupation(omega, e.species.lifetime);
        } else {
            nbar = require_number(mv, "nbar", mctx);
        }
        Vec3 axis = e.k_emit_direction;
        if (mv.contains("axis")) axis = parse_direction(mv["axis"], mctx + ".axis");
        const double participation = number_or(mv, "participation", 1.0, mctx);
        ModeSpec m = make_mode(e.species, omega, nbar, dot(e.k_emit_direction, axis),
                               dot(e.k_exc_direction, axis), participation);
        if (mv.contains("eta_emit")) m.eta_emit = require_number(mv, "eta_emit", mctx);
        if (mv.contains("eta_exc")) m.eta_exc = require_number(mv, "eta_exc", mctx);
        m.validate();
        e.modes.push_back(m);
    }
    e.validate();
    return e;
}

} // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    using detail::check_keys;
    using detail::number_or;
    using detail::require_number;

    check_keys(j, {"frequency_unit", "species_registry", "protocol", "mc", "sweep", "output"},
               "config");

    std::string unit;
    if (j.contains("frequency_unit")) unit = j["frequency_unit"].get<std::string>();

    std::vector<Species> registry;
    if (j.contains("species_registry")) {
        if (!j["species_registry"].is_array())
            throw ConfigError("species_registry: expected an array");
        std::size_t idx = 0;
        for (const auto& sv : j["species_registry"])
            registry.push_back(detail::parse_species(
                sv, registry, "species_registry[" + std::to_string(idx++) + "]"));
    }

    if (!j.contains("protocol")) throw ConfigError("config: missing 'protocol' section");
    const auto& p = j["protocol"];
    check_keys(p, {"beamsplitter", "windows", "timebin_T_ns", "detector_efficiency", "emitters"},
               "protocol");

    RunConfig cfg;

    if (p.contains("beamsplitter")) {
        const auto& b = p["beamsplitter"];
        check_keys(b, {"delta_bs", "transmission", "reflection"}, "protocol.beamsplitter");
        if (b.contains("delta_bs")) {
            if (b.contains("transmission") || b.contains("reflection"))
                throw ConfigError("protocol.beamsplitter: give either delta_bs or t/r, not both");
            cfg.protocol.beamsplitter =
                BeamsplitterSpec::from_imbalance(require_number(b, "delta_bs", "beamsplitter"));
        } else {
            cfg.protocol.beamsplitter = {require_number(b, "transmission", "beamsplitter"),
                                         require_number(b, "reflection", "beamsplitter")};
        }
    }

    if (!p.contains("emitters")) throw ConfigError("protocol: missing 'emitters' section");
    const auto& em = p["emitters"];
    check_keys(em, {"both", "A", "B"}, "protocol.emitters");
    if (em.contains("both")) {
        if (em.contains("A") || em.contains("B"))
            throw ConfigError("protocol.emitters: give either 'both' or 'A'/'B', not both");
        cfg.protocol.emitter_a =
            detail::parse_emitter(em["both"], registry, unit, "protocol.emitters.both");
        cfg.protocol.emitter_b = cfg.protocol.emitter_a;
    } else {
        if (!em.contains("A") || !em.contains("B"))
            throw ConfigError("protocol.emitters: need both 'A' and 'B' (or 'both')");
        cfg.protocol.emitter_a =
            detail::parse_emitter(em["A"], registry, unit, "protocol.emitters.A");
        cfg.protocol.emitter_b =
            detail::parse_emitter(em["B"], registry, unit, "protocol.emitters.B");
    }

    if (!p.contains("windows")) throw ConfigError("protocol: missing 'windows' section");
    {
        const auto& w = p["windows"];
        check_keys(w,
                   {"detector_window_ns", "difference_window_ns", "difference_window_w",
                    "known_offset_ns"},
                   "protocol.windows");
        if (!w.contains("detector_window_ns"))
            throw ConfigError("protocol.windows: missing 'detector_window_ns'");
        cfg.protocol.windows.detector_window =
            detail::window_ns(w["detector_window_ns"], "protocol.windows.detector_window_ns");
        const bool has_ns = w.contains("difference_window_ns");
        const bool has_w = w.contains("difference_window_w");
        if (has_ns == has_w)
            throw ConfigError(
                "protocol.windows: give exactly one of difference_window_ns / difference_window_w");
        if (has_ns)
            cfg.protocol.windows.difference_window =
                detail::window_ns(w["difference_window_ns"], "protocol.windows.difference_window_ns");
        else
            cfg.protocol.windows.difference_window =
                require_number(w, "difference_window_w", "protocol.windows") *
                cfg.protocol.emitter_a.species.lifetime;
        cfg.protocol.windows.known_offset =
            number_or(w, "known_offset_ns", 0.0, "protocol.windows") * 1e-9;
        cfg.protocol.windows.validate();
    }

    cfg.protocol.timebin_T = number_or(p, "timebin_T_ns", 0.0, "protocol") * 1e-9;
    cfg.protocol.detector_efficiency = number_or(p, "detector_efficiency", 1.0, "protocol");
    cfg.protocol.validate();

    if (j.contains("mc")) {
        const auto& m = j["mc"];
        check_keys(m, {"samples", "seed", "rewind", "rewind_efficiency"}, "mc");
        McSettings mc;
        mc.samples = static_cast<std::uint64_t>(require_number(m, "samples", "mc"));
        mc.seed = static_cast<std::uint64_t>(require_number(m, "seed", "mc"));
        if (mc.samples < 1) throw ConfigError("mc: samples must be >= 1");
        if (m.contains("rewind")) {
            if (!m["rewind"].is_boolean()) throw ConfigError("mc: 'rewind' must be a boolean");
            mc.rewind = m["rewind"].get<bool>();
        }
        mc.rewind_efficiency = number_or(m, "rewind_efficiency", 1.0, "mc");
        cfg.mc = mc;
    }

    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        check_keys(s, {"name", "values"}, "sweep");
        SweepSpec sweep;
        if (!s.contains("name") || !s["name"].is_string())
            throw ConfigError("sweep: missing string key 'name'");
        sweep.name = s["name"].get<std::string>();
        if (!s.contains("values") || !s["values"].is_array())
            throw ConfigError("sweep: missing array key 'values'");
        for (const auto& v : s["values"]) {
            if (!v.is_number()) throw ConfigError("sweep: values must be numbers");
            sweep.values.push_back(v.get<double>());
        }
        cfg.sweep = sweep;
    }

    if (j.contains("output")) {
        const auto& o = j["output"];
        detail::check_keys(o, {"format", "path"}, "output");
        if (o.contains("format")) {
            cfg.output.format = o["format"].get<std::string>();
            if (cfg.output.format != "csv" && cfg.output.format != "json" &&
                cfg.output.format != "markdown")
                throw ConfigError("output.format must be csv, json or markdown");
        }
        if (o.contains("path")) cfg.output.path = o["path"].get<std::string>();
    }

    return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// Apply one sweep point to a copy of the configuration.
inline void apply_sweep_value(RunConfig& cfg, const std::string& name, double value) {
    if (name == "w") {
        cfg.protocol.windows.difference_window = value * cfg.protocol.emitter_a.species.lifetime;
    } else if (name == "delta_bs") {
        cfg.protocol.beamsplitter = BeamsplitterSpec::from_imbalance(value);
    } else if (name == "timebin_T_ns") {
        cfg.protocol.timebin_T = value * 1e-9;
    } else if (name == "known_offset_ns") {
        cfg.protocol.windows.known_offset = value * 1e-9;
    } else if (name == "detector_efficiency") {
        cfg.protocol.detector_efficiency = value;
    } else if (name == "nbar") {
        for (auto* e : {&cfg.protocol.emitter_a, &cfg.protocol.emitter_b})
            for (auto& m : e->modes) m.nbar = value;
    } else {
        throw ConfigError("sweep: unknown parameter '" + name + "'");
    }
    cfg.protocol.validate();
}

} // namespace herald
