#pragma once

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "herald/config.hpp"
#include "herald/error_budget.hpp"
#include "herald/herald_engine.hpp"
#include "herald/report.hpp"
#include "herald/rewind.hpp"

namespace herald {

// Exit codes shared by all subcommands.
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_write = 3;
inline constexpr int exit_quadrature = 4;
inline constexpr int exit_disagreement = 5;

namespace cli_detail {

inline bool write_output(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return static_cast<bool>(std::cout);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) return false;
    out << text;
    return static_cast<bool>(out);
}

inline double window_w(const ProtocolSpec& spec) {
    return spec.windows.difference_window / spec.emitter_a.species.lifetime;
}

inline nlohmann::ordered_json channel_json(const ChannelEstimate& est) {
    nlohmann::ordered_json j;
    j["fidelity"] = est.bell.fidelity;
    j["coherence_abs"] = std::abs(est.bell.coherence);
    j["coherence_arg"] = std::arg(est.bell.coherence);
    j["population_down_up"] = est.bell.population_down_up;
    j["population_up_down"] = est.bell.population_up_down;
    j["herald_probability"] = est.bell.herald_probability;
    j["quadrature_error"] = est.quadrature_error;
    j["converged"] = est.converged;
    return j;
}

/// Sampled detection-time pairs inside the coincidence window, for rewind
/// spot checks.
inline std::vector<std::pair<double, double>> sample_window_times(const ProtocolSpec& spec,
                                                                  std::uint64_t seed,
                                                                  std::size_t count) {
    std::vector<std::pair<double, double>> out;
    const double tau_a = spec.emitter_a.species.lifetime;
    const double tau_b = spec.emitter_b.species.lifetime;
    std::uint64_t index = 0;
    while (out.size() < count && index < count * 1000) {
        SampleRng rng(seed ^ 0x52657769ull, index++);
        const double t_mu = rng.exponential(tau_a);
        const double t_nu = rng.exponential(tau_b);
        if (t_mu <= spec.windows.detector_window && t_nu <= spec.windows.detector_window &&
            std::abs(t_nu - t_mu) <= spec.windows.difference_window)
            out.emplace_back(t_mu, t_nu);
    }
    return out;
}

/// kappa normalization scale W * omega^R * tau averaged over the two emitters.
inline double kappa_scale(const ProtocolSpec& spec) {
    const double w = window_w(spec);
    const double xa = recoil_frequency(spec.emitter_a.species) * spec.emitter_a.species.lifetime;
    const double xb = recoil_frequency(spec.emitter_b.species) * spec.emitter_b.species.lifetime;
    return window_variance_factor(w) * 0.5 * (xa + xb);
}

inline int cmd_table1(double w, const std::string& kappa, const std::string& format,
                      const std::string& out_path) {
    KappaConvention conv;
    try {
        conv = kappa_from_name(kappa);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }
    if (!(w >= 0)) {
        std::cerr << "error: --w must be >= 0\n";
        return exit_usage;
    }
    const auto rows = error_budget_table(w, conv);
    std::string text;
    if (format == "markdown") text = format_error_budget_markdown(rows, w, conv);
    else if (format == "csv") text = format_error_budget_csv(rows, w, conv);
    else if (format == "json") text = format_error_budget_json(rows, w, conv);
    else {
        std::cerr << "error: unknown format '" << format << "'\n";
        return exit_usage;
    }
    if (!write_output(text, out_path)) {
        std::cerr << "error: cannot write '" << out_path << "'\n";
        return exit_write;
    }
    return exit_ok;
}

inline int cmd_fidelity(const RunConfig& cfg, const std::string& out_path) {
    nlohmann::ordered_json j;
    j["command"] = "fidelity";
    j["yield"] = protocol_yield(cfg.protocol);
    j["window_w"] = window_w(cfg.protocol);
    j["window_variance_W"] = window_variance_factor(window_w(cfg.protocol));
    j["timebin_T_ns"] = cfg.protocol.timebin_T * 1e9;
    j["delta_bs"] = cfg.protocol.beamsplitter.power_imbalance();
    nlohmann::ordered_json channels;
    bool all_converged = true;
    std::vector<std::string> warnings;
    for (HeraldChannel ch : all_channels) {
        const ChannelEstimate est = estimate_channel(cfg.protocol, ch);
        channels[channel_name(ch)] = channel_json(est);
        if (!est.converged) {
            all_converged = false;
            warnings.push_back(std::string("quadrature not converged for ") + channel_name(ch) +
                               " (error bound " + format_double(est.quadrature_error) + ")");
        }
    }
    j["channels"] = channels;
    j["warnings"] = warnings;
    if (!write_output(j.dump(2) + "\n", out_path)) {
        std::cerr << "error: cannot write '" << out_path << "'\n";
        return exit_write;
    }
    return all_converged ? exit_ok : exit_quadrature;
}

inline int cmd_sweep(const RunConfig& cfg, const std::string& out_path) {
    std::string csv =
        "name,value,yield,window_variance_W,"
        "fidelity_opposite_1001,coherence_abs_opposite_1001,herald_probability_opposite_1001,"
        "fidelity_opposite_0110,coherence_abs_opposite_0110,herald_probability_opposite_0110,"
        "fidelity_same_1100,coherence_abs_same_1100,herald_probability_same_1100,"
        "fidelity_same_0011,coherence_abs_same_0011,herald_probability_same_0011\n";
    for (double value : cfg.sweep->values) {
        RunConfig point = cfg;
        apply_sweep_value(point, cfg.sweep->name, value);
        csv += cfg.sweep->name + "," + format_double(value, "%g") + "," +
               format_double(protocol_yield(point.protocol)) + "," +
               format_double(window_variance_factor(window_w(point.protocol)));
        for (HeraldChannel ch : all_channels) {
            const BellResult bell = bell_fidelity(point.protocol, ch);
            csv += "," + format_double(bell.fidelity) + "," +
                   format_double(std::abs(bell.coherence)) + "," +
                   format_double(bell.herald_probability);
        }
        csv += "\n";
    }
    if (!write_output(csv, out_path)) {
        std::cerr << "error: cannot write '" << out_path << "'\n";
        return exit_write;
    }
    return exit_ok;
}

inline int cmd_oracle_compare(const RunConfig& cfg, const std::string& out_path) {
    const ProtocolSpec& spec = cfg.protocol;
    const McSettings mc = *cfg.mc;

    McOptions opts;
    opts.samples = mc.samples;
    opts.seed = mc.seed;
    opts.rewind = mc.rewind;
    opts.rewind_efficiency = mc.rewind_efficiency;

    const HeraldChannel ch = HeraldChannel::same_1100; // no beamsplitter prefactor
    const ChannelEstimate quad = mc.rewind ? estimate_channel_rewound(spec, ch, mc.rewind_efficiency)
                                           : estimate_channel(spec, ch);
    const ChannelEstimate quad_opp = mc.rewind
                                         ? estimate_channel_rewound(spec, HeraldChannel::opposite_1001,
                                                                    mc.rewind_efficiency)
                                         : estimate_channel(spec, HeraldChannel::opposite_1001);
    const McProtocolResult mcr = mc_protocol(spec, opts);
    const McChannel& mc_ch = mcr.channel(ch);

    const double sigma = std::max(mc_ch.fidelity_se, 1e-12);
    const double n_sigma = std::abs(mc_ch.bell.fidelity - quad.bell.fidelity) / sigma;

    // Closed-form error budget per kappa convention (general forms, exact nbar).
    nlohmann::ordered_json closed;
    for (KappaConvention conv :
         {KappaConvention::table, KappaConvention::printed_eq37, KappaConvention::oracle}) {
        double timebin = 0, random = 0;
        for (const auto* e : {&spec.emitter_a, &spec.emitter_b}) {
            const double tau = e->species.lifetime;
            for (const auto& m : e->modes) {
                timebin += timebin_error(m, spec.timebin_T);
                random += random_emission_error(m, tau, window_w(spec), conv);
            }
        }
        nlohmann::ordered_json c;
        c["timebin"] = timebin;
        c["random"] = random;
        c["one_minus_F"] = timebin + random;
        closed[kappa_name(conv)] = c;
    }

    // Effective kappa in 2E = kappa W omega^R tau, measured with the time-bin
    // term switched off.
    ProtocolSpec t0 = spec;
    t0.timebin_T = 0;
    const double scale = kappa_scale(spec);
    const double kappa_quad = (1.0 - estimate_channel(t0, ch).bell.fidelity) / scale;
    McOptions t0_opts = opts;
    t0_opts.rewind = false;
    const McProtocolResult mc_t0 = mc_protocol(t0, t0_opts);
    const double kappa_mc = (1.0 - mc_t0.channel(ch).bell.fidelity) / scale;
    const double kappa_mc_se = mc_t0.channel(ch).fidelity_se / scale;

    nlohmann::ordered_json j;
    j["command"] = "oracle-compare";
    j["samples"] = mc.samples;
    j["seed"] = mc.seed;
    j["rewind"] = mc.rewind;
    j["yield_closed_form"] = protocol_yield(spec);
    j["quadrature"]["fidelity_same_side"] = quad.bell.fidelity;
    j["quadrature"]["fidelity_opposite"] = quad_opp.bell.fidelity;
    j["quadrature"]["coherence_abs_same_side"] = std::abs(quad.bell.coherence);
    j["quadrature"]["error_bound"] = quad.quadrature_error;
    j["quadrature"]["converged"] = quad.converged;
    j["monte_carlo"]["fidelity"] = mc_ch.bell.fidelity;
    j["monte_carlo"]["fidelity_se"] = mc_ch.fidelity_se;
    j["monte_carlo"]["coherence_abs"] = std::abs(mc_ch.bell.coherence);
    j["monte_carlo"]["coherence_abs_se"] = mc_ch.coherence_abs_se;
    j["monte_carlo"]["yield"] = mcr.yield;
    j["monte_carlo"]["yield_se"] = mcr.yield_se;
    j["monte_carlo"]["discard_fraction"] = mcr.discard_fraction;
    j["agreement"]["delta_fidelity"] = mc_ch.bell.fidelity - quad.bell.fidelity;
    j["agreement"]["n_sigma"] = n_sigma;
    j["closed_form_one_minus_F"] = closed;
    j["kappa"]["definition"] = "two-emitter Doppler random error 2E = kappa * W * omega_R * tau";
    j["kappa"]["measured_quadrature"] = kappa_quad;
    j["kappa"]["measured_mc"] = kappa_mc;
    j["kappa"]["measured_mc_se"] = kappa_mc_se;
    j["kappa"]["convention_values"]["table"] = kappa_value(KappaConvention::table);
    j["kappa"]["convention_values"]["printed-eq37"] = kappa_value(KappaConvention::printed_eq37);
    j["kappa"]["convention_values"]["oracle"] = kappa_value(KappaConvention::oracle);
    j["phase_contrast_loss"] = phase_contrast_loss(spec);

    if (!write_output(j.dump(2) + "\n", out_path)) {
        std::cerr << "error: cannot write '" << out_path << "'\n";
        return exit_write;
    }
    if (n_sigma > 5.0) {
        std::cerr << "error: Monte-Carlo and quadrature fidelities disagree by " << n_sigma
                  << " sigma\n";
        return exit_disagreement;
    }
    return exit_ok;
}

inline int cmd_rewind_check(const RunConfig& cfg, std::uint64_t trials, std::uint64_t seed,
                            const std::string& out_path) {
    const ProtocolSpec& spec = cfg.protocol;
    const auto times = sample_window_times(spec, seed, 8);
    if (times.empty()) {
        std::cerr << "error: could not sample detection times inside the coincidence window\n";
        return exit_usage;
    }
    double max_deficit = 0, control = 0;
    const std::uint64_t per_pair = std::max<std::uint64_t>(1, trials / times.size());
    for (const auto& [t_mu, t_nu] : times) {
        max_deficit = std::max(max_deficit, verify_disentangle(spec, t_mu, t_nu, per_pair, seed));
        control = std::max(control, verify_disentangle_swapped(spec, t_mu, t_nu, per_pair, seed));
    }
    const double eff = cfg.mc ? cfg.mc->rewind_efficiency : 1.0;
    nlohmann::ordered_json j;
    j["command"] = "rewind-check";
    j["trials"] = trials;
    j["seed"] = seed;
    j["rewind_efficiency"] = eff;
    j["max_disentangle_deficit"] = max_deficit;
    j["negative_control_deficit_swapped_times"] = control;
    for (HeraldChannel ch : all_channels)
        j["fidelity_with_rewind"][channel_name(ch)] =
            bell_fidelity_rewound(spec, ch, eff).fidelity;
    if (!write_output(j.dump(2) + "\n", out_path)) {
        std::cerr << "error: cannot write '" << out_path << "'\n";
        return exit_write;
    }
    return exit_ok;
}

} // namespace cli_detail

/// Entry point shared by the binary and the test suite.
inline int run_cli(std::vector<std::string> args) {
    CLI::App app{"Two-photon heralded entanglement: recoil error budgets, exact fidelity "
                 "quadrature and a Monte-Carlo oracle"};
    app.require_subcommand(1);

    std::string config_path, out_path, format, kappa = "table";
    double w = 2.0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::uint64_t samples = 0;
    bool samples_set = false;

    auto* table1 = app.add_subcommand("table1", "Built-in per-species error-budget table");
    table1->add_option("--w", w, "Relative time-difference window T_Delta / tau");
    table1->add_option("--kappa", kappa, "Random-error constant convention")
        ->check(CLI::IsMember({"table", "printed-eq37", "oracle"}));
    std::string table_format = "markdown";
    table1->add_option("--format", table_format, "Output format")
        ->check(CLI::IsMember({"csv", "json", "markdown"}));
    table1->add_option("--out", out_path, "Output path (default stdout)");

    auto* fidelity = app.add_subcommand("fidelity", "Per-channel Bell result by quadrature");
    fidelity->add_option("--config", config_path, "Config file")->required();
    std::string fid_format = "json";
    fidelity->add_option("--format", fid_format)->check(CLI::IsMember({"json"}));
    fidelity->add_option("--out", out_path, "Output path (default stdout)");

    auto* sweep = app.add_subcommand("sweep", "Parameter sweep to CSV");
    sweep->add_option("--config", config_path, "Config file")->required();
    sweep->add_option("--out", out_path, "Output path (default stdout)");

    auto* oracle = app.add_subcommand("oracle-compare",
                                      "Quadrature vs Monte-Carlo vs closed forms; measures kappa");
    oracle->add_option("--config", config_path, "Config file")->required();
    oracle->add_option("--samples", samples)->each([&](const std::string&) { samples_set = true; });
    oracle->add_option("--seed", seed)->each([&](const std::string&) { seed_set = true; });
    oracle->add_option("--out", out_path, "Output path (default stdout)");

    auto* rewind = app.add_subcommand("rewind-check", "Disentangling-correction verification");
    rewind->add_option("--config", config_path, "Config file")->required();
    std::uint64_t trials = 1000;
    rewind->add_option("--samples", trials, "Thermal draws");
    std::uint64_t rewind_seed = 1;
    rewind->add_option("--seed", rewind_seed);
    rewind->add_option("--out", out_path, "Output path (default stdout)");

    std::vector<const char*> argv;
    argv.push_back("herald");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) { // --help
            std::cout << app.help();
            return exit_ok;
        }
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }

    try {
        if (table1->parsed()) return cli_detail::cmd_table1(w, kappa, table_format, out_path);

        RunConfig cfg = load_config(config_path);
        if (out_path.empty()) out_path = cfg.output.path; // --out wins over the config
        if (fidelity->parsed()) return cli_detail::cmd_fidelity(cfg, out_path);
        if (sweep->parsed()) {
            if (!cfg.sweep) {
                std::cerr << "error: config has no 'sweep' section\n";
                return exit_usage;
            }
            return cli_detail::cmd_sweep(cfg, out_path);
        }
        if (oracle->parsed()) {
            if (!cfg.mc) {
                std::cerr << "error: oracle-compare needs an 'mc' section in the config\n";
                return exit_usage;
            }
            if (samples_set) cfg.mc->samples = samples;
            if (seed_set) cfg.mc->seed = seed;
            if (cfg.mc->samples < 1) {
                std::cerr << "error: mc samples must be >= 1\n";
                return exit_usage;
            }
            return cli_detail::cmd_oracle_compare(cfg, out_path);
        }
        if (rewind->parsed()) return cli_detail::cmd_rewind_check(cfg, trials, rewind_seed, out_path);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }
    return exit_usage;
}

} // namespace herald
