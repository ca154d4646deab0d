#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ddsv/error.hpp"
#include "ddsv/normal.hpp"
#include "ddsv/oracle.hpp"
#include "ddsv/pricing.hpp"

using namespace ddsv;
using Catch::Approx;

namespace {

SwapGeometry annuity_only(double annuity, double forward) {
    SwapGeometry g;
    g.m = 1;
    g.n = 2;
    g.annuity = annuity;
    g.swap_rate = forward;
    return g;
}

ExpansionMoments moments(double nu, double mu3, double mu4, double r0 = 0.03) {
    return ExpansionMoments{nu, mu3, mu4, r0};
}

double strike_at(const ExpansionMoments& m, double z) { return m.r0 + z * m.nu; }

double receiver_quadrature(double (*density)(const ExpansionMoments&, double), const SwapGeometry& g,
                           const ExpansionMoments& m, double strike) {
    const double zk = (strike - m.r0) / m.nu;
    auto f = [&](double z) { return (zk - z) * density(m, z); };
    const double lo = std::min(zk, 0.0) - 12.0;
    return g.annuity * m.nu *
           boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, zk, 15, 1e-15);
}

}  // namespace

TEST_CASE("Bachelier closed form", "[pricing]") {
    const auto g = annuity_only(8.5, 0.03);
    const auto m = moments(0.01, 0.0, 3.0);
    const auto atm = bachelier_price(g, m, m.r0);
    CHECK(atm.price == Approx(0.01 * 8.5 * inv_sqrt_2pi).epsilon(1e-15));
    CHECK(atm.z_k == 0.0);
    CHECK(atm.engine == Engine::bachelier);
    CHECK_FALSE(atm.negative);
    CHECK(bachelier_price(g, m, strike_at(m, 40.0)).price == 0.0);

    double prev = 1.0;
    for (double z = -3.0; z <= 3.0; z += 0.25) {
        const double p = bachelier_price(g, m, strike_at(m, z)).price;
        CHECK(p < prev);
        prev = p;
    }

    // ν=0.01, B=8.5, K - R(0) = 0.005
    const double q = 8.5 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                               [](double z) { return std::max(0.01 * z - 0.005, 0.0) * norm_pdf(z); }, 0.5,
                               14.0, 15, 1e-16);
    CHECK(std::abs(bachelier_price(g, m, m.r0 + 0.005).price - q) < 1e-12);
}

TEST_CASE("expansion prices equal quadrature against their densities", "[pricing][property]") {
    const auto g = annuity_only(8.5, 0.03);
    const auto generic = moments(0.01, -0.3, 3.5);
    const double k = strike_at(generic, 0.7);
    CHECK(std::abs(gc_price(g, generic, k).price -
                   oracle::quadrature_payoff_price([&](double z) { return gc_density(generic, z); }, g, generic,
                                                   k)) < 1e-10);
    CHECK(std::abs(ew_price(g, generic, k).price -
                   oracle::quadrature_payoff_price([&](double z) { return ew_density(generic, z); }, g, generic,
                                                   k)) < 1e-10);

    std::mt19937_64 gen(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 25; ++t) {
        const double mu3 = -0.8 + 1.6 * u(gen);
        const auto m = moments(0.002 + 0.02 * u(gen), mu3, 1.0 + mu3 * mu3 + 4.0 * u(gen));
        const auto geom = annuity_only(1.0 + 15.0 * u(gen), m.r0);
        for (double z : {-2.0, -1.0, 0.0, 1.0, 2.0, -2.0 + 4.0 * u(gen)}) {
            const double strike = strike_at(m, z);
            const double q1 =
                oracle::quadrature_payoff_price([&](double x) { return gc_density(m, x); }, geom, m, strike);
            const double q2 =
                oracle::quadrature_payoff_price([&](double x) { return ew_density(m, x); }, geom, m, strike);
            CHECK(std::abs(gc_price(geom, m, strike).price - q1) < 1e-10);
            CHECK(std::abs(ew_price(geom, m, strike).price - q2) < 1e-10);
        }
    }
}

TEST_CASE("Gaussian moments reduce the expansions to Bachelier", "[pricing]") {
    const auto g = annuity_only(6.0, 0.02);
    const auto m = moments(0.008, 0.0, 3.0, 0.02);
    for (double z : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        const double k = strike_at(m, z);
        CHECK(gc_price(g, m, k).price == bachelier_price(g, m, k).price);
        CHECK(ew_price(g, m, k).price == bachelier_price(g, m, k).price);
        CHECK(gc_smile(m, k) == m.nu);
        CHECK(ew_smile(m, k) == m.nu);
    }
    const auto kurt = moments(0.008, 0.0, 3.9, 0.02);
    for (double z : {-1.5, 0.3, 2.0}) {
        CHECK(ew_price(g, kurt, strike_at(kurt, z)).price == gc_price(g, kurt, strike_at(kurt, z)).price);
        CHECK(ew_smile(kurt, strike_at(kurt, z)) == gc_smile(kurt, strike_at(kurt, z)));
    }
}

TEST_CASE("ATM prices and vols", "[pricing]") {
    const auto g = annuity_only(7.25, 0.025);
    const auto m4 = moments(0.012, 0.0, 4.0, 0.025);
    const double base = m4.nu * g.annuity * inv_sqrt_2pi;
    CHECK(gc_price(g, m4, m4.r0).price == Approx(base * 23.0 / 24.0).epsilon(1e-15));

    const auto m = moments(0.012, -0.4, 3.6, 0.025);
    CHECK(gc_price(g, m, m.r0).price == Approx(base * (1.0 - 0.6 / 24.0)).epsilon(1e-15));
    CHECK(ew_price(g, m, m.r0).price == Approx(base * (1.0 - (0.6 - 0.16) / 24.0)).epsilon(1e-15));
    CHECK(gc_smile(m, m.r0) == Approx(m.nu * (1.0 - 0.6 / 24.0)).epsilon(1e-15));
    CHECK(ew_smile(m, m.r0) == Approx(m.nu * (1.0 - (0.6 - 0.16) / 24.0)).epsilon(1e-15));
}

TEST_CASE("put-call parity for every closed-form engine", "[pricing][property]") {
    std::mt19937_64 gen(43);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        const double mu3 = -0.6 + 1.2 * u(gen);
        const auto m = moments(0.003 + 0.01 * u(gen), mu3, 1.0 + mu3 * mu3 + 3.0 * u(gen), 0.01 + 0.03 * u(gen));
        const auto g = annuity_only(2.0 + 10.0 * u(gen), m.r0);
        const double k = strike_at(m, -2.5 + 5.0 * u(gen));
        const double gc_rec = receiver_from_payer(g, gc_price(g, m, k).price, k);
        const double ew_rec = receiver_from_payer(g, ew_price(g, m, k).price, k);
        CHECK(std::abs(gc_rec - receiver_quadrature(&gc_density, g, m, k)) < 1e-10);
        CHECK(std::abs(ew_rec - receiver_quadrature(&ew_density, g, m, k)) < 1e-10);
        // Bachelier receiver is the payer reflected through the forward
        const double bach_rec = receiver_from_payer(g, bachelier_price(g, m, k).price, k);
        CHECK(bach_rec == Approx(bachelier_price(g, m, 2.0 * m.r0 - k).price).margin(1e-15));
    }
}

TEST_CASE("smile formulas approximate the exact inversion", "[pricing]") {
    const auto g = annuity_only(5.0, 0.03);
    const auto m = moments(0.01, 0.1, 3.2, 0.03);
    // the second-order gap is about z²/2 times the relative adjustment
    for (double z : {-2.0, -1.0, -0.5, 0.5, 1.0}) {
        const double k = strike_at(m, z);
        const double exact = bachelier_implied_vol(g, gc_price(g, m, k).price, k);
        const double adjustment = gc_smile(m, k) - m.nu;
        CHECK(std::abs(gc_smile(m, k) - exact) < 0.02 * std::abs(adjustment));
    }

    // halving (μ₃, μ₄-3) shrinks the gap by about four
    auto gap = [&](double scale, double z) {
        const auto ms = moments(0.01, 0.3 * scale, 3.0 + 0.6 * scale, 0.03);
        const double k = strike_at(ms, z);
        return std::abs(ew_smile(ms, k) - bachelier_implied_vol(g, ew_price(g, ms, k).price, k));
    };
    CHECK(gap(0.4, 0.0) < 1e-15);
    for (double z : {-1.5, -0.7, 1.5}) {
        const double r1 = gap(0.4, z) / gap(0.2, z);
        const double r2 = gap(0.2, z) / gap(0.1, z);
        CHECK(r1 > 3.0);
        CHECK(r1 < 5.5);
        CHECK(r2 > 3.0);
        CHECK(r2 < 5.5);
    }
}

TEST_CASE("Bachelier inversion", "[pricing]") {
    const auto g = annuity_only(8.5, 0.03);
    const auto m = moments(0.0085, 0.0, 3.0, 0.03);
    for (double z = -3.0; z <= 3.0; z += 0.5) {
        const double k = strike_at(m, z);
        CHECK(std::abs(bachelier_implied_vol(g, bachelier_price(g, m, k).price, k) - m.nu) < 1e-10);
    }

    const double atm_price = 0.042;
    CHECK(bachelier_implied_vol(g, atm_price, g.swap_rate) ==
          Approx(atm_price * std::sqrt(2.0 * M_PI) / g.annuity).epsilon(1e-14));

    const double k = 0.02;
    const double intrinsic = g.annuity * (g.swap_rate - k);
    const double tiny = bachelier_implied_vol(g, intrinsic + 1e-12, k);
    CHECK(tiny > 0.0);
    CHECK(tiny < 2e-3);

    CHECK_THROWS_AS(bachelier_implied_vol(g, intrinsic, k), InversionError);
    CHECK_THROWS_AS(bachelier_implied_vol(g, -1e-6, 0.04), InversionError);
    CHECK_THROWS_AS(bachelier_implied_vol(g, std::nan(""), 0.04), InversionError);
}

TEST_CASE("negative expansion prices are flagged and not invertible", "[pricing]") {
    const auto g = annuity_only(5.0, 0.03);
    const auto m = moments(0.01, -1.5, 3.0 + 2.25, 0.03);
    bool seen = false;
    for (double z = 1.0; z <= 6.0; z += 0.1) {
        const auto p = gc_price(g, m, strike_at(m, z));
        CHECK(p.negative == (p.price < 0.0));
        if (p.negative) {
            seen = true;
            CHECK_THROWS_AS(bachelier_implied_vol(g, p.price, strike_at(m, z)), InversionError);
        }
    }
    CHECK(seen);
}
