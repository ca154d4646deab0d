#pragma once

#include <cmath>
#include <string_view>

#include "ddsv/expansion.hpp"
#include "ddsv/market.hpp"

namespace ddsv {

enum class Engine { bachelier, gram_charlier, edgeworth, contour, monte_carlo };

std::string_view engine_name(Engine e);

/// Payer swaption price per unit notional.
struct SwaptionPrice {
    double price = 0.0;
    Engine engine = Engine::bachelier;
    double z_k = 0.0;        // (K - R(0)) / ν
    bool negative = false;   // expansion price below zero; kept unclamped
};

/// Undiscounted Bachelier call on a unit-annuity swap: ν{φ(z) - zΦ(-z)}.
double bachelier_unit_price(double nu, double z_k);

SwaptionPrice bachelier_price(const SwapGeometry& geom, const ExpansionMoments& m, double strike);
SwaptionPrice gc_price(const SwapGeometry& geom, const ExpansionMoments& m, double strike);
SwaptionPrice ew_price(const SwapGeometry& geom, const ExpansionMoments& m, double strike);

/// Receiver price by put-call parity: payer - B^S(0)(R(0) - K).
double receiver_from_payer(const SwapGeometry& geom, double payer, double strike);

/// Implied standard deviations ν₁(z_K), ν₂(z_K) (absolute units, not annualized).
double gc_smile(const ExpansionMoments& m, double strike);
double ew_smile(const ExpansionMoments& m, double strike);

/// Bachelier standard deviation ν reproducing a payer `price`.
/// Throws InversionError outside (intrinsic, cap) bounds.
double bachelier_implied_vol(const SwapGeometry& geom, double price, double strike);

/// Same inversion on undiscounted quantities: price/B^S, forward R(0).
double bachelier_implied_std(double unit_price, double forward, double strike);

/// ν → quoted normal vol per sqrt(year).
inline double annualize(double nu, double expiry) { return nu / std::sqrt(expiry); }

}  // namespace ddsv
