#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "ddsv/error.hpp"
#include "ddsv/expansion.hpp"
#include "ddsv/montecarlo.hpp"
#include "ddsv/oracle.hpp"
#include "support.hpp"

using namespace ddsv;
using Catch::Approx;

namespace {

struct Stats {
    double mean = 0.0;
    double var = 0.0;
    double stderr_mean = 0.0;
};

Stats stats_of(const std::vector<double>& x) {
    Stats s;
    const double n = static_cast<double>(x.size());
    s.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    for (double v : x) s.var += (v - s.mean) * (v - s.mean);
    s.var /= n - 1.0;
    s.stderr_mean = std::sqrt(s.var / n);
    return s;
}

ModelParams stressed() {
    auto p = fixtures::moderate();
    p.kappa = 0.6;
    p.theta = 1.0;
    p.epsilon = 1.0;
    p.rho = -0.6;
    return p;
}

}  // namespace

TEST_CASE("terminal swap rate is a martingale", "[montecarlo]") {
    const auto p = fixtures::moderate();
    const auto g = build_swap_geometry(fixtures::curve(), p, 5, 15);
    mc::SimConfig cfg;
    cfg.paths = 20000;
    cfg.antithetic = false;
    const auto s = stats_of(mc::simulate_swap_rate(g, p, cfg).values);
    CHECK(std::abs(s.mean - g.swap_rate) < 3.0 * s.stderr_mean);
}

TEST_CASE("Gaussian-limit variance matches the MGF", "[montecarlo]") {
    auto p = fixtures::moderate();
    p.epsilon = 1e-6;
    const auto g = build_swap_geometry(fixtures::curve(), p, 5, 15);
    mc::SimConfig cfg;
    cfg.paths = 40000;
    cfg.antithetic = false;
    const auto s = stats_of(mc::simulate_swap_rate(g, p, cfg).values);
    const double nu2 = psi_derivatives_at_zero(g, p).variance();
    // the sample variance of a normal has standard error σ²√(2/(n-1))
    CHECK(std::abs(s.var - nu2) < 3.0 * nu2 * std::sqrt(2.0 / (cfg.paths - 1.0)));
}

TEST_CASE("third and fourth moments match the MGF", "[montecarlo]") {
    const auto p = fixtures::moderate();
    const auto g = build_swap_geometry(fixtures::curve(), p, 10, 20);
    mc::SimConfig cfg;
    cfg.paths = 200000;
    cfg.antithetic = false;
    cfg.steps_per_year = 24;
    const auto x = mc::simulate_swap_rate(g, p, cfg).values;
    const auto mom = standardized_moments(psi_derivatives_at_zero(g, p));
    double m3 = 0.0, m4 = 0.0;
    for (double r : x) {
        const double z = (r - g.swap_rate) / mom.nu;
        m3 += z * z * z;
        m4 += z * z * z * z;
    }
    m3 /= static_cast<double>(x.size());
    m4 /= static_cast<double>(x.size());
    CHECK(m3 == Approx(mom.mu3).margin(0.05));
    CHECK(m4 == Approx(mom.mu4).margin(0.2));
}

TEST_CASE("simulation is deterministic across runs and workers", "[montecarlo]") {
    const auto p = fixtures::moderate();
    const auto g = build_swap_geometry(fixtures::curve(), p, 5, 10);
    mc::SimConfig cfg;
    cfg.paths = 2002;
    cfg.seed = 99;
    const auto a = mc::simulate_swap_rate(g, p, cfg);
    const auto b = mc::simulate_swap_rate(g, p, cfg);
    CHECK(a.values == b.values);
    for (unsigned w : {2u, 3u, 7u}) {
        cfg.workers = w;
        CHECK(mc::simulate_swap_rate(g, p, cfg).values == a.values);
    }
    cfg.workers = 1;
    cfg.seed = 100;
    CHECK(mc::simulate_swap_rate(g, p, cfg).values != a.values);
}

TEST_CASE("antithetic pairs mirror the first driving normal", "[montecarlo]") {
    auto p = fixtures::moderate();
    p.epsilon = 1e-6;
    p.v0 = 1.0;
    p.theta = 1.0;
    const auto g = build_swap_geometry(fixtures::curve(), p, 3, 6);
    mc::SimConfig cfg;
    cfg.paths = 10;
    const auto s = mc::simulate_swap_rate(g, p, cfg);
    CHECK(s.antithetic);
    // with V frozen at its mean, the pair is symmetric about R(0)
    for (std::size_t i = 0; i < s.values.size(); i += 2)
        CHECK(s.values[i] + s.values[i + 1] == Approx(2.0 * g.swap_rate).epsilon(1e-6));
}

TEST_CASE("variance stays positive near the Feller boundary", "[montecarlo]") {
    const auto p = stressed();
    const auto g = build_swap_geometry(fixtures::curve(), p, 10, 20);
    mc::SimConfig cfg;
    cfg.paths = 4000;
    cfg.steps_per_year = 4;
    for (double r : mc::simulate_swap_rate(g, p, cfg).values) REQUIRE(std::isfinite(r));
}

TEST_CASE("estimates on a degenerate sample", "[montecarlo]") {
    SwapGeometry g;
    g.annuity = 4.0;
    g.swap_rate = 0.03;
    mc::Sample s{std::vector<double>(10, 0.035), false};
    const auto e = mc::mc_price_and_ci(s, g, 0.03);
    CHECK(e.price == Approx(4.0 * 0.005).epsilon(1e-14));
    CHECK(e.degenerate);
    CHECK(e.ci_low == e.price);
    CHECK(e.ci_high == e.price);
    CHECK(e.std_error == 0.0);
    CHECK(e.nu == 0.0);

    CHECK_THROWS_AS(mc::mc_price_and_ci(mc::Sample{}, g, 0.03), InputError);
    CHECK_THROWS_AS(mc::mc_price_and_ci(s, g, 0.03, 1.5), InputError);
}

TEST_CASE("far in-the-money payer is the forward payoff", "[montecarlo]") {
    const auto p = fixtures::moderate();
    const auto g = build_swap_geometry(fixtures::curve(), p, 2, 7);
    mc::SimConfig cfg;
    cfg.paths = 5000;
    const auto sample = mc::simulate_swap_rate(g, p, cfg);
    const double mean = stats_of(sample.values).mean;
    const double k = g.swap_rate - 1.0;
    const auto e = mc::mc_price_and_ci(sample, g, k);
    CHECK(e.price == Approx(g.annuity * (mean - k)).epsilon(1e-12));
    CHECK(e.ci_low <= e.price);
    CHECK(e.ci_high >= e.price);
}

TEST_CASE("vol interval brackets the point estimate", "[montecarlo]") {
    const auto p = fixtures::moderate();
    const auto g = build_swap_geometry(fixtures::curve(), p, 5, 15);
    mc::SimConfig cfg;
    const auto sample = mc::simulate_swap_rate(g, p, cfg);
    for (double off : {-0.02, 0.0, 0.02}) {
        const auto e = mc::mc_price_and_ci(sample, g, g.swap_rate + off);
        CHECK_FALSE(e.degenerate);
        CHECK(e.nu_low < e.nu);
        CHECK(e.nu < e.nu_high);
        CHECK(e.ci_high - e.ci_low == Approx(2.0 * 1.959963984540054 * e.std_error).epsilon(1e-12));
    }
}

TEST_CASE("contour price within 3 standard errors of a large simulation", "[montecarlo][slow]") {
    const auto p = fixtures::moderate();
    const auto g = build_swap_geometry(fixtures::curve(), p, 5, 15);
    mc::SimConfig cfg;
    cfg.paths = 1000000;
    cfg.steps_per_year = 24;
    const auto sample = mc::simulate_swap_rate(g, p, cfg);
    for (double off : {-0.02, 0.0, 0.02}) {
        const double k = g.swap_rate + off;
        const auto e = mc::mc_price_and_ci(sample, g, k);
        CHECK(std::abs(e.price - oracle::contour_price(g, p, k).price) < 3.0 * e.std_error);
    }
}

TEST_CASE("refining the time grid moves the price toward the contour", "[montecarlo][slow]") {
    const auto p = stressed();
    const auto g = build_swap_geometry(fixtures::curve(), p, 10, 20);
    const double k = g.swap_rate + 0.02;
    const double exact = oracle::contour_price(g, p, k).price;
    mc::SimConfig cfg;
    cfg.paths = 200000;
    cfg.steps_per_year = 4;
    const double coarse = mc::mc_price_and_ci(mc::simulate_swap_rate(g, p, cfg), g, k).price;
    cfg.steps_per_year = 32;
    const double fine = mc::mc_price_and_ci(mc::simulate_swap_rate(g, p, cfg), g, k).price;
    CHECK(std::abs(fine - exact) < std::abs(coarse - exact));
}

TEST_CASE("increment correlation carries the sign of rho", "[montecarlo]") {
    const auto g0 = fixtures::moderate();
    mc::SimConfig cfg;
    cfg.paths = 2000;
    for (double rho : {-0.7, -0.2, 0.3, 0.8}) {
        auto p = g0;
        p.rho = rho;
        const auto g = build_swap_geometry(fixtures::curve(), p, 5, 15);
        const double c = mc::increment_correlation(g, p, cfg);
        CHECK(c * rho > 0.0);
    }
}

TEST_CASE("simulation configuration errors", "[montecarlo]") {
    const auto p = fixtures::moderate();
    const auto g = build_swap_geometry(fixtures::curve(), p, 2, 4);
    mc::SimConfig cfg;
    cfg.paths = 1;
    CHECK_THROWS_AS(mc::simulate_swap_rate(g, p, cfg), InputError);
    cfg.paths = 11;
    CHECK_THROWS_AS(mc::simulate_swap_rate(g, p, cfg), InputError);
    cfg.antithetic = false;
    CHECK_NOTHROW(mc::simulate_swap_rate(g, p, cfg));
    cfg.steps_per_year = 3;
    CHECK_THROWS_AS(mc::simulate_swap_rate(g, p, cfg), InputError);
}
