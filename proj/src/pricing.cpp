#include "ddsv/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ddsv/error.hpp"
#include "ddsv/normal.hpp"

namespace ddsv {

std::string_view engine_name(Engine e) {
    switch (e) {
        case Engine::bachelier: return "bachelier";
        case Engine::gram_charlier: return "gram_charlier";
        case Engine::edgeworth: return "edgeworth";
        case Engine::contour: return "contour";
        case Engine::monte_carlo: return "monte_carlo";
    }
    return "unknown";
}

double bachelier_unit_price(double nu, double z_k) {
    return nu * (norm_pdf(z_k) - z_k * norm_cdf(-z_k));
}

namespace {

double moneyness(const ExpansionMoments& m, double strike) { return (strike - m.r0) / m.nu; }

SwaptionPrice make(double price, Engine engine, double z_k) {
    return SwaptionPrice{price, engine, z_k, price < 0.0};
}

// Gram-Charlier correction inside the braces, shared by prices and smiles.
double gc_bracket(const ExpansionMoments& m, double z) {
    return m.mu3 / 6.0 * z + (m.mu4 - 3.0) / 24.0 * (z * z - 1.0);
}

double ew_extra(const ExpansionMoments& m, double z) {
    return m.mu3 * m.mu3 / 72.0 * (z * z * z * z - 6.0 * z * z + 3.0);
}

}  // namespace

SwaptionPrice bachelier_price(const SwapGeometry& geom, const ExpansionMoments& m, double strike) {
    const double z = moneyness(m, strike);
    return make(geom.annuity * bachelier_unit_price(m.nu, z), Engine::bachelier, z);
}

SwaptionPrice gc_price(const SwapGeometry& geom, const ExpansionMoments& m, double strike) {
    const double z = moneyness(m, strike);
    const double base = bachelier_unit_price(m.nu, z);
    const double price = geom.annuity * (base + m.nu * norm_pdf(z) * gc_bracket(m, z));
    return make(price, Engine::gram_charlier, z);
}

SwaptionPrice ew_price(const SwapGeometry& geom, const ExpansionMoments& m, double strike) {
    const double z = moneyness(m, strike);
    const double base = bachelier_unit_price(m.nu, z);
    const double price =
        geom.annuity * (base + m.nu * norm_pdf(z) * (gc_bracket(m, z) + ew_extra(m, z)));
    return make(price, Engine::edgeworth, z);
}

double receiver_from_payer(const SwapGeometry& geom, double payer, double strike) {
    return payer - geom.annuity * (geom.swap_rate - strike);
}

double gc_smile(const ExpansionMoments& m, double strike) {
    const double z = moneyness(m, strike);
    return m.nu * (1.0 + gc_bracket(m, z));
}

double ew_smile(const ExpansionMoments& m, double strike) {
    const double z = moneyness(m, strike);
    return gc_smile(m, strike) + m.nu * ew_extra(m, z);
}

double bachelier_implied_std(double unit_price, double forward, double strike) {
    const double x = forward - strike;
    const double ax = std::abs(x);
    const double intrinsic = std::max(x, 0.0);
    const double tv = unit_price - intrinsic;
    if (!std::isfinite(unit_price) || !(unit_price > 0.0) || !(tv > 0.0))
        throw InversionError("price " + std::to_string(unit_price) +
                             " outside Bachelier bounds (intrinsic " + std::to_string(intrinsic) + ")");
    if (ax == 0.0) return tv / inv_sqrt_2pi;

    // Time value ν φ(|x|/ν) - |x| Φ(-|x|/ν): increasing in ν, slope φ(|x|/ν).
    auto time_value = [ax](double nu) {
        const double h = ax / nu;
        return nu * norm_pdf(h) - ax * norm_cdf(-h);
    };

    double lo = 0.0;
    double hi = std::max(tv / inv_sqrt_2pi, ax);
    while (time_value(hi) < tv) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi)) throw InversionError("no upper bracket for Bachelier inversion");
    }

    // A few bisection steps make the Newton start safe in the deep-OTM tail.
    for (int i = 0; i < 8; ++i) {
        const double mid = 0.5 * (lo + hi);
        (time_value(mid) < tv ? lo : hi) = mid;
    }

    double nu = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double f = time_value(nu) - tv;
        if (f < 0.0) lo = nu; else hi = nu;
        const double vega = norm_pdf(ax / nu);
        double next = vega > 0.0 ? nu - f / vega : std::numeric_limits<double>::quiet_NaN();
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - nu);
        nu = next;
        if (step <= 1e-15 * std::max(1.0, nu) || hi - lo <= 1e-16 * std::max(1.0, hi)) break;
    }
    return nu;
}

double bachelier_implied_vol(const SwapGeometry& geom, double price, double strike) {
    return bachelier_implied_std(price / geom.annuity, geom.swap_rate, strike);
}

}  // namespace ddsv
