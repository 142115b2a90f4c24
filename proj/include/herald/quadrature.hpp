#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace herald {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Nodes and weights by Newton iteration on the Legendre recurrence.
inline GaussLegendre gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    static std::map<int, GaussLegendre> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    GaussLegendre rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it2 = 0; it2 < 100; ++it2) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    cache[n] = rule;
    return rule;
}

namespace detail {

inline double exp_cdf(double t, double rate) {
    if (std::isinf(t)) return 1.0;
    return -std::expm1(-rate * t);
}

inline double exp_quantile(double u, double rate) { return -std::log1p(-u) / rate; }

} // namespace detail

/// Integral of F(t_mu, t_nu) over the coincidence window
///   { 0 <= t <= T_D on both axes, |t_nu - t_mu| <= T_Delta }
/// against the exponential probability measure
///   rate_mu e^{-rate_mu t_mu} rate_nu e^{-rate_nu t_nu} dt_mu dt_nu.
/// F == 1 therefore reproduces the closed-form yield. Each axis is mapped
/// through u = 1 - e^{-rate t}, which absorbs the exponential scale and leaves
/// a smooth integrand for tensor Gauss-Legendre; the region kinks at
/// t_mu = T_Delta and T_D - T_Delta are handled by splitting the outer axis.
template <typename F>
auto integrate_coincidence_window(double T_D, double T_Delta, double rate_mu, double rate_nu,
                                  F&& f, int nodes = 64) {
    using Result = decltype(f(0.0, 0.0));
    if (!(T_Delta > 0) || !(T_Delta <= T_D))
        throw std::invalid_argument("integrate_coincidence_window: need 0 < T_Delta <= T_D");
    if (!(rate_mu > 0) || !(rate_nu > 0))
        throw std::invalid_argument("integrate_coincidence_window: rates must be positive");

    std::vector<double> breaks{0.0};
    if (std::isfinite(T_Delta) && T_Delta < T_D) breaks.push_back(T_Delta);
    if (std::isfinite(T_D)) {
        if (std::isfinite(T_Delta) && T_D - T_Delta > 0) breaks.push_back(T_D - T_Delta);
        breaks.push_back(T_D);
    } else {
        breaks.push_back(std::numeric_limits<double>::infinity());
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    const GaussLegendre rule = gauss_legendre(nodes);
    Result total{};
    for (std::size_t seg = 0; seg + 1 < breaks.size(); ++seg) {
        const double ua = detail::exp_cdf(breaks[seg], rate_mu);
        const double ub = detail::exp_cdf(breaks[seg + 1], rate_mu);
        if (!(ub > ua)) continue;
        const double uh = 0.5 * (ub - ua), uc = 0.5 * (ub + ua);
        for (int i = 0; i < nodes; ++i) {
            const double u_mu = uc + uh * rule.nodes[i];
            const double t_mu = detail::exp_quantile(u_mu, rate_mu);
            const double lo = std::max(0.0, t_mu - T_Delta);
            const double hi = std::min(T_D, t_mu + T_Delta);
            const double va = detail::exp_cdf(lo, rate_nu);
            const double vb = detail::exp_cdf(hi, rate_nu);
            if (!(vb > va)) continue;
            const double vh = 0.5 * (vb - va), vc = 0.5 * (vb + va);
            Result inner{};
            for (int j = 0; j < nodes; ++j) {
                const double u_nu = vc + vh * rule.nodes[j];
                const double t_nu = detail::exp_quantile(u_nu, rate_nu);
                inner += rule.weights[j] * f(t_mu, t_nu);
            }
            total += (rule.weights[i] * uh * vh) * inner;
        }
    }
    return total;
}

/// Same integral evaluated at the requested node count and at double the
/// count; the difference is reported as the error bound.
template <typename Result>
struct ConvergedIntegral {
    Result value{};
    double error = 0;
    bool converged = false;
};

template <typename F>
auto integrate_coincidence_window_checked(double T_D, double T_Delta, double rate_mu,
                                          double rate_nu, F&& f, int nodes = 64,
                                          double tol = 1e-8) {
    using Result = decltype(f(0.0, 0.0));
    const Result coarse = integrate_coincidence_window(T_D, T_Delta, rate_mu, rate_nu, f, nodes);
    const Result fine = integrate_coincidence_window(T_D, T_Delta, rate_mu, rate_nu, f, 2 * nodes);
    ConvergedIntegral<Result> out;
    out.value = fine;
    out.error = std::abs(fine - coarse);
    out.converged = out.error <= tol;
    return out;
}

} // namespace herald
