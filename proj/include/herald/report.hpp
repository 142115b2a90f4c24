#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "herald/error_budget.hpp"

namespace herald {

inline std::string format_double(double v, const char* spec = "%.17g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

/// Display rounding used by the built-in table: kHz to one decimal (none above
/// 100), time-bin percent to two decimals, random percent to three.
inline std::string display_recoil_kHz(double v) {
    return format_double(v, v >= 100 ? "%.0f" : "%.1f");
}

inline std::string display_timebin_percent(double fraction) {
    return format_double(100.0 * fraction, "%.2f");
}

inline std::string display_random_percent(double fraction) {
    return format_double(100.0 * fraction, "%.3f");
}

inline std::string format_error_budget_markdown(const std::vector<ErrorBudgetRow>& rows, double w,
                                                KappaConvention convention) {
    std::string out;
    out += "Recoil error budget (Doppler limit, w = " + format_double(w, "%g") +
           ", W = " + format_double(window_variance_factor(w), "%.4f") +
           ", kappa convention = " + kappa_name(convention) + ")\n\n";
    out += "| atom | lambda (nm) | tau (ns) | recoil wR/2pi (kHz) | time-bin 2E_T (%) | random 2E_R (%) | ell |\n";
    out += "|------|-------------|----------|---------------------|-------------------|-----------------|-----|\n";
    for (const auto& r : rows) {
        const Species& s = find_species(r.species_label);
        out += "| " + r.species_label + " | " + format_double(s.wavelength * 1e9, "%g") + " | " +
               format_double(s.lifetime * 1e9, "%g") + " | " +
               display_recoil_kHz(r.recoil_frequency_kHz) + " | " +
               display_timebin_percent(r.timebin_error) + " | " +
               display_random_percent(r.random_error) + " | " +
               format_double(r.timebin_length_ell, "%.3f") + " |\n";
    }
    return out;
}

inline std::string format_error_budget_csv(const std::vector<ErrorBudgetRow>& rows, double w,
                                           KappaConvention convention) {
    std::string out =
        "species,wavelength_nm,lifetime_ns,recoil_kHz,recoil_kHz_display,"
        "timebin_error_percent,timebin_error_percent_display,"
        "random_error_percent,random_error_percent_display,ell,w,kappa_convention\n";
    for (const auto& r : rows) {
        const Species& s = find_species(r.species_label);
        out += r.species_label + "," + format_double(s.wavelength * 1e9, "%g") + "," +
               format_double(s.lifetime * 1e9, "%g") + "," +
               format_double(r.recoil_frequency_kHz) + "," +
               display_recoil_kHz(r.recoil_frequency_kHz) + "," +
               format_double(100.0 * r.timebin_error) + "," +
               display_timebin_percent(r.timebin_error) + "," +
               format_double(100.0 * r.random_error) + "," +
               display_random_percent(r.random_error) + "," +
               format_double(r.timebin_length_ell) + "," + format_double(w, "%g") + "," +
               kappa_name(convention) + "\n";
    }
    return out;
}

inline std::string format_error_budget_json(const std::vector<ErrorBudgetRow>& rows, double w,
                                            KappaConvention convention) {
    nlohmann::ordered_json j;
    j["w"] = w;
    j["window_variance_W"] = window_variance_factor(w);
    j["kappa_convention"] = kappa_name(convention);
    j["kappa_value"] = kappa_value(convention);
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        const Species& s = find_species(r.species_label);
        nlohmann::ordered_json row;
        row["species"] = r.species_label;
        row["wavelength_nm"] = s.wavelength * 1e9;
        row["lifetime_ns"] = s.lifetime * 1e9;
        row["recoil_kHz"] = r.recoil_frequency_kHz;
        row["recoil_kHz_display"] = display_recoil_kHz(r.recoil_frequency_kHz);
        row["timebin_error_percent"] = 100.0 * r.timebin_error;
        row["timebin_error_percent_display"] = display_timebin_percent(r.timebin_error);
        row["random_error_percent"] = 100.0 * r.random_error;
        row["random_error_percent_display"] = display_random_percent(r.random_error);
        row["ell"] = r.timebin_length_ell;
        j["rows"].push_back(row);
    }
    return j.dump(2) + "\n";
}

} // namespace herald
