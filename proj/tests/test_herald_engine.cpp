#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <limits>

#include "herald/error_budget.hpp"
#include "herald/herald_engine.hpp"

using namespace herald;

constexpr double inf = std::numeric_limits<double>::infinity();

namespace {

ProtocolSpec no_recoil_spec(double delta_bs = 0.0, double w = inf) {
    const Species& yb = find_species("171Yb+@369");
    ProtocolSpec spec;
    EmitterSpec e = make_default_emitter(yb, two_pi * 1e6, 0.0);
    e.modes[0].eta_emit = 0.0;
    e.modes[0].eta_exc = 0.0;
    spec.emitter_a = e;
    spec.emitter_b = e;
    spec.beamsplitter = BeamsplitterSpec::from_imbalance(delta_bs);
    spec.windows = {inf, std::isinf(w) ? inf : w * yb.lifetime, 0.0};
    return spec;
}

/// Doppler-cooled Yb+ 369 at a 2 pi x 1 MHz trap, single emission-aligned mode.
ProtocolSpec doppler_spec(double w = 2.0, double timebin_T = 0.0) {
    const Species& yb = find_species("171Yb+@369");
    const double omega = two_pi * 1e6;
    ProtocolSpec spec;
    spec.emitter_a = make_default_emitter(yb, omega, doppler_occupation(omega, yb.lifetime));
    spec.emitter_b = spec.emitter_a;
    spec.windows = {inf, w * yb.lifetime, 0.0};
    spec.timebin_T = timebin_T;
    return spec;
}

double closed_form_error(const ProtocolSpec& spec, KappaConvention conv) {
    const double w = spec.windows.difference_window / spec.emitter_a.species.lifetime;
    double err = 0;
    for (const auto* e : {&spec.emitter_a, &spec.emitter_b})
        for (const auto& m : e->modes) {
            err += timebin_error(m, spec.timebin_T);
            err += random_emission_error(m, e->species.lifetime, w, conv);
        }
    return err;
}

} // namespace

TEST_CASE("herald probabilities") {
    SUBCASE("balanced, lossless, open windows: 1/8 per channel") {
        const ProtocolSpec spec = no_recoil_spec();
        for (HeraldChannel ch : all_channels)
            CHECK(herald_probability(spec, ch) == doctest::Approx(0.125).epsilon(1e-12));
    }
    SUBCASE("imbalance boosts opposite channels and starves same-side ones") {
        const double delta = 0.1;
        const ProtocolSpec spec = no_recoil_spec(delta);
        const double boost = 1.0 + delta * delta, cut = 1.0 - delta * delta;
        CHECK(herald_probability(spec, HeraldChannel::opposite_1001) ==
              doctest::Approx(0.125 * boost).epsilon(1e-12));
        CHECK(herald_probability(spec, HeraldChannel::same_0011) ==
              doctest::Approx(0.125 * cut).epsilon(1e-12));
    }
    SUBCASE("dead detectors herald nothing") {
        ProtocolSpec spec = no_recoil_spec();
        spec.detector_efficiency = 0.0;
        for (HeraldChannel ch : all_channels) CHECK(herald_probability(spec, ch) == 0.0);
    }
}

TEST_CASE("no-recoil coherence") {
    SUBCASE("balanced beamsplitter gives C = -1 / +1") {
        const ProtocolSpec spec = no_recoil_spec();
        const auto opp = coherence_quadrature(spec, HeraldChannel::opposite_1001);
        const auto same = coherence_quadrature(spec, HeraldChannel::same_1100);
        CHECK(opp.converged);
        CHECK(std::abs(opp.value - std::complex<double>(-1, 0)) < 1e-10);
        CHECK(std::abs(same.value - std::complex<double>(1, 0)) < 1e-10);
        const BellResult bell = bell_fidelity(spec, HeraldChannel::opposite_1001);
        CHECK(bell.fidelity == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(bell.population_down_up == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("imbalance degrades |C-| by (1-d^2)/(1+d^2) and leaves C+ alone") {
        for (double delta : {0.05, 0.1, 0.2}) {
            const ProtocolSpec spec = no_recoil_spec(delta);
            const double expected = (1.0 - delta * delta) / (1.0 + delta * delta);
            CHECK(std::abs(coherence_quadrature(spec, HeraldChannel::opposite_1001).value) ==
                  doctest::Approx(expected).epsilon(1e-6));
            CHECK(std::abs(coherence_quadrature(spec, HeraldChannel::same_1100).value) ==
                  doctest::Approx(1.0).epsilon(1e-8));
        }
    }
    SUBCASE("mismatched lifetimes cost wavepacket overlap: C+ = 8/9 for 2x") {
        ProtocolSpec spec = no_recoil_spec();
        spec.emitter_b.species.lifetime = 2.0 * spec.emitter_a.species.lifetime;
        const auto same = coherence_quadrature(spec, HeraldChannel::same_1100);
        CHECK(std::abs(same.value) == doctest::Approx(8.0 / 9.0).epsilon(1e-9));
    }
}

TEST_CASE("populations follow the branch weights") {
    const ProtocolSpec spec = no_recoil_spec(0.2);
    const BellResult bell = bell_fidelity(spec, HeraldChannel::opposite_1001);
    const double t2 = spec.beamsplitter.transmission * spec.beamsplitter.transmission;
    const double r2 = spec.beamsplitter.reflection * spec.beamsplitter.reflection;
    const double w1 = t2 * t2, w2 = r2 * r2;
    CHECK(bell.population_down_up == doctest::Approx(w1 / (w1 + w2)).epsilon(1e-12));
    CHECK(bell.population_up_down == doctest::Approx(w2 / (w1 + w2)).epsilon(1e-12));
    CHECK(bell.population_down_up + bell.population_up_down == doctest::Approx(1.0).epsilon(1e-14));

    const BellResult same = bell_fidelity(spec, HeraldChannel::same_1100);
    CHECK(same.population_down_up == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("recoil decoherence against the closed-form budget") {
    SUBCASE("random-emission error, Doppler regime") {
        const ProtocolSpec spec = doppler_spec(2.0);
        const BellResult bell = bell_fidelity(spec, HeraldChannel::same_1100);
        const double err = 1.0 - bell.fidelity;
        const double closed = closed_form_error(spec, KappaConvention::oracle);
        CHECK(err == doctest::Approx(closed).epsilon(0.10));
        // same-side and opposite channels agree at delta = 0
        const BellResult opp = bell_fidelity(spec, HeraldChannel::opposite_0110);
        CHECK(opp.fidelity == doctest::Approx(bell.fidelity).epsilon(1e-10));
    }
    SUBCASE("time-bin error, Doppler regime") {
        const double omega = two_pi * 1e6;
        const ProtocolSpec spec = doppler_spec(0.05, 0.1 / omega); // omega T~ = 0.1
        const BellResult bell = bell_fidelity(spec, HeraldChannel::same_1100);
        const double closed = closed_form_error(spec, KappaConvention::oracle);
        CHECK(1.0 - bell.fidelity == doctest::Approx(closed).epsilon(0.10));
    }
    SUBCASE("strong decoherence drives F to 1/2") {
        // asynchronous time bin with a hot excitation kick: Z has a large
        // time-independent term, so |C| collapses
        ProtocolSpec spec = doppler_spec(2.0);
        const double omega = spec.emitter_a.modes[0].frequency;
        spec.timebin_T = pi / omega;
        for (auto* e : {&spec.emitter_a, &spec.emitter_b}) {
            e->modes[0].eta_emit = 0.0;
            e->modes[0].eta_exc = 1.0;
            e->modes[0].nbar = 40.0;
        }
        const BellResult bell = bell_fidelity(spec, HeraldChannel::same_1100);
        CHECK(std::abs(bell.coherence) < 1e-12);
        CHECK(bell.fidelity == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("phase contrast loss") {
    SUBCASE("zero without recoil") {
        CHECK(phase_contrast_loss(no_recoil_spec()) == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("cancels exactly for identical emitters") {
        CHECK(phase_contrast_loss(doppler_spec(2.0)) < 1e-13);
    }
    SUBCASE("asymmetric emitters: present but far below the exponential error") {
        // emitter B detuned and its mode tilted off the emission axis
        ProtocolSpec spec = doppler_spec(2.0);
        const double omega_b = two_pi * 1.3e6;
        EmitterSpec b = spec.emitter_b;
        b.modes.clear();
        b.modes.push_back(make_mode(b.species, omega_b,
                                    doppler_occupation(omega_b, b.species.lifetime), 0.8, 0.6));
        spec.emitter_b = b;
        const double loss = phase_contrast_loss(spec);
        const double err = 1.0 - bell_fidelity(spec, HeraldChannel::same_1100).fidelity;
        CHECK(loss > 0.0);
        CHECK(loss < 0.05 * err);
        MESSAGE("phase contrast loss ", loss, " vs exponential error ", err);
    }
}

TEST_CASE("Monte-Carlo oracle") {
    SUBCASE("no recoil, open windows: exact eighth per channel, F = 1") {
        const ProtocolSpec spec = no_recoil_spec();
        McOptions opts;
        opts.samples = 20000;
        opts.seed = 42;
        const McProtocolResult mc = mc_protocol(spec, opts);
        CHECK(mc.yield == doctest::Approx(1.0).epsilon(1e-12));
        for (HeraldChannel ch : all_channels) {
            CHECK(mc.channel(ch).bell.fidelity == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(mc.channel(ch).bell.herald_probability ==
                  doctest::Approx(0.125).epsilon(1e-12));
        }
        CHECK(mc.discard_fraction == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(std::abs(mc.channel(HeraldChannel::opposite_1001).bell.coherence -
                       std::complex<double>(-1, 0)) < 1e-12);
    }
    SUBCASE("bitwise deterministic for a fixed seed") {
        const ProtocolSpec spec = doppler_spec(2.0);
        McOptions opts;
        opts.samples = 30000;
        opts.seed = 7;
        const McProtocolResult a = mc_protocol(spec, opts);
        const McProtocolResult b = mc_protocol(spec, opts);
        CHECK(a.channel(HeraldChannel::same_1100).bell.fidelity ==
              b.channel(HeraldChannel::same_1100).bell.fidelity);
        CHECK(a.yield == b.yield);
        CHECK(a.mean_overlap == b.mean_overlap);
        opts.seed = 8;
        const McProtocolResult c = mc_protocol(spec, opts);
        CHECK(a.channel(HeraldChannel::same_1100).bell.fidelity !=
              c.channel(HeraldChannel::same_1100).bell.fidelity);
    }
    SUBCASE("agrees with quadrature within 3 sigma (thermal recoil)") {
        const ProtocolSpec spec = doppler_spec(2.0);
        McOptions opts;
        opts.samples = 200000;
        opts.seed = 3;
        const McProtocolResult mc = mc_protocol(spec, opts);
        const BellResult quad = bell_fidelity(spec, HeraldChannel::same_1100);
        const McChannel& ch = mc.channel(HeraldChannel::same_1100);
        CHECK(ch.fidelity_se > 0.0);
        CHECK(std::abs(ch.bell.fidelity - quad.fidelity) < 3.0 * ch.fidelity_se);
        CHECK(mc.yield == doctest::Approx(protocol_yield(spec)).epsilon(5e-3));
    }
    SUBCASE("agrees with quadrature for asymmetric emitters (nonzero net phase)") {
        // different trap frequencies and a tilted mode on B, so the overlap
        // phases of A and B do not cancel and M is genuinely complex; pins
        // down the conjugation convention in both paths
        ProtocolSpec spec = doppler_spec(2.0, 0.2e-6);
        const double omega_b = two_pi * 1.45e6;
        EmitterSpec b = spec.emitter_b;
        b.modes.clear();
        b.modes.push_back(make_mode(b.species, omega_b,
                                    doppler_occupation(omega_b, b.species.lifetime), 0.8, 0.6));
        spec.emitter_b = b;
        McOptions opts;
        opts.samples = 400000;
        opts.seed = 29;
        const McProtocolResult mc = mc_protocol(spec, opts);
        const auto quad = coherence_quadrature(spec, HeraldChannel::same_1100);
        const McChannel& ch = mc.channel(HeraldChannel::same_1100);
        // compare the full complex coherence component-wise at ~3 sigma
        const double se = std::max(ch.coherence_abs_se, 1e-12);
        CHECK(std::abs(ch.bell.coherence.real() - quad.value.real()) < 4.0 * se);
        CHECK(std::abs(ch.bell.coherence.imag() - quad.value.imag()) < 4.0 * se);
        CHECK(std::abs(std::arg(quad.value)) > 1e-4); // the phase really is nonzero
    }
    SUBCASE("agrees with quadrature for mismatched lifetimes") {
        ProtocolSpec spec = no_recoil_spec(0.0, 2.0);
        spec.emitter_b.species.lifetime = 2.0 * spec.emitter_a.species.lifetime;
        McOptions opts;
        opts.samples = 200000;
        opts.seed = 11;
        const McProtocolResult mc = mc_protocol(spec, opts);
        const auto quad = coherence_quadrature(spec, HeraldChannel::same_1100);
        const McChannel& ch = mc.channel(HeraldChannel::same_1100);
        CHECK(std::abs(std::abs(ch.bell.coherence) - std::abs(quad.value)) <
              3.0 * std::max(ch.coherence_abs_se, 1e-12));
    }
    SUBCASE("channel closure at full windows") {
        const ProtocolSpec spec = no_recoil_spec(0.15);
        McOptions opts;
        opts.samples = 10000;
        opts.seed = 1;
        const McProtocolResult mc = mc_protocol(spec, opts);
        double total = mc.discard_probability;
        for (HeraldChannel ch : all_channels) total += mc.channel(ch).bell.herald_probability;
        // all double-emission events accounted: 4 chi = P P p p eps^2
        CHECK(total == doctest::Approx(4.0 * herald_prefactor(spec)).epsilon(1e-12));
    }
    SUBCASE("sample count validation") {
        McOptions opts;
        opts.samples = 0;
        CHECK_THROWS_AS(mc_protocol(no_recoil_spec(), opts), std::invalid_argument);
    }
}

TEST_CASE("known-offset veto") {
    const Species& yb = find_species("171Yb+@369");
    ProtocolSpec spec = doppler_spec(2.0);
    spec.windows.known_offset = yb.lifetime;
    SUBCASE("yield picks up e^{-dt0/tau}, fidelity stays put") {
        ProtocolSpec no_off = spec;
        no_off.windows.known_offset = 0.0;
        CHECK(protocol_yield(spec) ==
              doctest::Approx(std::exp(-1.0) * protocol_yield(no_off)).epsilon(1e-12));
        const double f_off = bell_fidelity(spec, HeraldChannel::same_1100).fidelity;
        const double f_no = bell_fidelity(no_off, HeraldChannel::same_1100).fidelity;
        CHECK(f_off == doctest::Approx(f_no).epsilon(1e-6));
    }
    SUBCASE("Monte-Carlo sees the same yield") {
        McOptions opts;
        opts.samples = 400000;
        opts.seed = 19;
        const McProtocolResult mc = mc_protocol(spec, opts);
        CHECK(std::abs(mc.yield - protocol_yield(spec)) < 4.0 * std::max(mc.yield_se, 1e-6));
    }
    SUBCASE("veto with a finite detector window") {
        ProtocolSpec finite = spec;
        finite.windows.detector_window = 4.0 * yb.lifetime;
        McOptions opts;
        opts.samples = 400000;
        opts.seed = 23;
        const McProtocolResult mc = mc_protocol(finite, opts);
        CHECK(std::abs(mc.yield - protocol_yield(finite)) < 4.0 * std::max(mc.yield_se, 1e-6));
        const BellResult quad = bell_fidelity(finite, HeraldChannel::same_1100);
        const McChannel& ch = mc.channel(HeraldChannel::same_1100);
        CHECK(std::abs(ch.bell.fidelity - quad.fidelity) < 3.0 * std::max(ch.fidelity_se, 1e-12));
    }
}

TEST_CASE("fidelity invariant under emitter relabeling") {
    // swapping A and B conjugates the motional product, so |C| and F are
    // unchanged even for fully asymmetric emitters (zero known offset)
    ProtocolSpec spec = doppler_spec(2.0, 0.2e-6);
    const double omega_b = two_pi * 1.45e6;
    EmitterSpec b = spec.emitter_b;
    b.modes.clear();
    b.modes.push_back(make_mode(b.species, omega_b,
                                doppler_occupation(omega_b, b.species.lifetime), 0.8, 0.6));
    spec.emitter_b = b;

    ProtocolSpec swapped = spec;
    std::swap(swapped.emitter_a, swapped.emitter_b);
    for (HeraldChannel ch : {HeraldChannel::opposite_1001, HeraldChannel::same_1100}) {
        const auto c_ab = coherence_quadrature(spec, ch);
        const auto c_ba = coherence_quadrature(swapped, ch);
        CHECK(std::abs(c_ab.value - std::conj(c_ba.value)) < 1e-12);
        CHECK(bell_fidelity(spec, ch).fidelity ==
              doctest::Approx(bell_fidelity(swapped, ch).fidelity).epsilon(1e-12));
    }
}

TEST_CASE("quadrature convergence under node doubling") {
    const ProtocolSpec spec = doppler_spec(2.0);
    QuadratureOptions coarse;
    coarse.nodes = 64;
    QuadratureOptions fine;
    fine.nodes = 128;
    const double f64 = bell_fidelity(spec, HeraldChannel::same_1100, coarse).fidelity;
    const double f128 = bell_fidelity(spec, HeraldChannel::same_1100, fine).fidelity;
    CHECK(std::abs(f64 - f128) < 1e-8);
    CHECK(estimate_channel(spec, HeraldChannel::same_1100).converged);
}
