#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "ddsv/error.hpp"
#include "ddsv/market.hpp"
#include "support.hpp"

using namespace ddsv;
using Catch::Approx;

namespace {

// Swap rate from forwards alone, for finite differencing.
double swap_rate_from_forwards(const YieldCurve& curve, std::vector<double> fwd, std::size_t m,
                               std::size_t n) {
    double p = 1.0, annuity = 0.0, pm = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == m) pm = p;
        p /= 1.0 + curve.accrual(j) * fwd[j];
        if (j >= m) annuity += curve.accrual(j) * p;
    }
    return (pm - p) / annuity;
}

}  // namespace

TEST_CASE("flat curve forwards", "[market]") {
    const auto c = fixtures::flat_curve(0.01, 11);
    for (std::size_t j = 0; j < c.forward_count(); ++j)
        CHECK(c.forward(j) == Approx(std::exp(0.01) - 1.0).epsilon(1e-13));
    CHECK(std::exp(0.01) - 1.0 == Approx(0.0100502).margin(1e-7));
}

TEST_CASE("equal discounts give a zero forward", "[market]") {
    const YieldCurve c({0.0, 1.0, 2.0}, {1.0, 1.0, 1.0});
    CHECK(c.forward(1) == 0.0);
}

TEST_CASE("30-point fixture forwards match the spreadsheet values", "[market]") {
    // (P_j / P_{j+1} - 1) / ΔT computed independently in a spreadsheet
    const double expected[] = {
        -2.503614397319165e-03, -1.543188747010760e-03, -6.265633548330207e-04, 2.480365665720186e-04,
        1.082321921268559e-03,  1.877938035990567e-03,  2.636469067111236e-03,  3.359437752876282e-03,
        4.378786427595038e-03,  5.630724204068738e-03,  6.765218878452384e-03,  7.791849355821334e-03,
        8.719483352705559e-03,  9.556323207857709e-03,  1.067698842237941e-02,  1.190225093605934e-02,
        1.288224801974125e-02,  1.365770572255731e-02,  1.426328481409178e-02,  1.472840822110810e-02,
        1.507798780012193e-02,  1.533305899911674e-02,  1.551133615145872e-02,  1.562769285843690e-02,
        1.583185834931111e-02,  1.593537297360352e-02,  1.568323475428568e-02,  1.562440597321542e-02,
        1.556668149178595e-02};
    const auto c = load_curve(fixtures::read_text(fixtures::data_path("curve_30pt.csv")));
    REQUIRE(c.forward_count() == std::size(expected));
    for (std::size_t j = 0; j < c.forward_count(); ++j) CHECK(c.forward(j) == Approx(expected[j]).epsilon(1e-12));
}

TEST_CASE("curve parsing errors name the row", "[market]") {
    CHECK_THROWS_AS(load_curve("tenor,discount\n0,1\n1,0.99\n1,0.98\n"), ParseError);
    CHECK_THROWS_AS(load_curve("tenor,discount\n0,1\n1,-0.5\n"), ParseError);
    CHECK_THROWS_AS(load_curve("tenor,discount\n0,1\n1,abc\n"), ParseError);
    CHECK_THROWS_AS(load_curve("tenor,discount\n0,1\n1\n"), ParseError);
    try {
        load_curve("tenor,discount\n0,1\n1,0.99\n2,zz\n", "c.csv");
        FAIL("no throw");
    } catch (const ParseError& e) {
        CHECK(e.row() == 4);
        CHECK(std::string(e.what()).find("c.csv:4") != std::string::npos);
    }
}

TEST_CASE("vol surface validation", "[market]") {
    const auto s = load_vols("expiry,tenor,strike_offset_bp,normal_vol_bp\n5,10,ATM,60\n5,10,-100,65.5\n");
    REQUIRE(s.size() == 2);
    CHECK(s.quotes()[0].atm);
    CHECK(s.quotes()[0].normal_vol == Approx(0.006));
    CHECK(s.quotes()[1].strike_offset_bp == -100.0);
    CHECK_THROWS_AS(load_vols("expiry,tenor,strike_offset_bp,normal_vol_bp\n5,10,ATM,-1\n"), ParseError);
    CHECK_THROWS_AS(load_vols("expiry,tenor,strike_offset_bp,normal_vol_bp\n5,10,ATM,60\n5,10,atm,61\n"),
                    ParseError);
    CHECK_THROWS_AS(load_vols("expiry,tenor,normal_vol_bp\n5,10,60\n"), ParseError);
}

TEST_CASE("single-period swap is the forward", "[market]") {
    const auto c = fixtures::curve();
    const auto p = fixtures::moderate();
    const auto g = build_swap_geometry(c, p, 7, 8);
    REQUIRE(g.alpha.size() == 1);
    CHECK(g.alpha[0] == Approx(1.0).epsilon(1e-15));
    CHECK(g.swap_rate == Approx(c.forward(7)).epsilon(1e-13));
    CHECK(g.w[0] == Approx(c.forward(7) + p.delta).epsilon(1e-13));
}

TEST_CASE("flat curve swap rate equals the flat forward", "[market]") {
    const auto c = fixtures::flat_curve(0.02, 31);
    const auto w = frozen_weights(c, 0.01, 5, 15);
    CHECK(w.swap_rate == Approx(std::exp(0.02) - 1.0).epsilon(1e-12));
}

TEST_CASE("annuity, alpha and swap-rate identities", "[market][property]") {
    fixtures::ParamGen gen(11);
    for (int trial = 0; trial < 50; ++trial) {
        // random curve with mildly negative to positive forwards
        std::vector<double> t{0.0}, p{1.0};
        for (int i = 1; i <= 40; ++i) {
            t.push_back(t.back() + gen.uniform(0.25, 1.5));
            p.push_back(p.back() / (1.0 + (t.back() - t[t.size() - 2]) * gen.uniform(-0.004, 0.05)));
        }
        const YieldCurve c(t, p);
        const std::size_t m = gen.pick(1, 20);
        const std::size_t n = m + gen.pick(1, 19);
        const auto w = frozen_weights(c, 0.01, m, n);

        double annuity = 0.0, weighted = 0.0;
        for (std::size_t j = m; j < n; ++j) {
            annuity += c.accrual(j) * c.discount(j + 1);
            weighted += w.alpha[j - m] * c.forward(j);
        }
        CHECK(fixtures::rel_err(w.annuity, annuity) < 1e-12);
        CHECK(fixtures::rel_err(weighted, w.swap_rate) < 1e-12);
    }
}

TEST_CASE("common discount scaling leaves rates and weights unchanged", "[market][property]") {
    const auto c = fixtures::curve();
    std::vector<double> p = c.discounts();
    for (std::size_t i = 1; i < p.size(); ++i) p[i] *= 1.37;
    // P(0,0) stays 1; swaps starting at T_1 or later only see ratios of the scaled discounts
    const YieldCurve scaled(c.tenors(), p);
    for (auto [m, n] : {std::pair<std::size_t, std::size_t>{2, 12}, {5, 15}, {10, 40}}) {
        const auto a = frozen_weights(c, 0.02, m, n);
        const auto b = frozen_weights(scaled, 0.02, m, n);
        CHECK(fixtures::rel_err(b.swap_rate, a.swap_rate) < 1e-13);
        for (std::size_t j = 0; j < a.w.size(); ++j) {
            CHECK(fixtures::rel_err(b.alpha[j], a.alpha[j]) < 1e-13);
            CHECK(fixtures::rel_err(b.w[j], a.w[j]) < 1e-12);
        }
    }
}

TEST_CASE("frozen weights equal shifted finite-difference gradients", "[market]") {
    const auto c = fixtures::curve();
    const double delta = 0.02;
    for (auto [m, n] : {std::pair<std::size_t, std::size_t>{5, 15}, {1, 2}, {10, 40}, {20, 50}}) {
        const auto w = frozen_weights(c, delta, m, n);
        std::vector<double> fwd(c.forward_count());
        for (std::size_t j = 0; j < fwd.size(); ++j) fwd[j] = c.forward(j);
        CHECK(fixtures::rel_err(swap_rate_from_forwards(c, fwd, m, n), w.swap_rate) < 1e-12);
        for (std::size_t j = m; j < n; ++j) {
            const double h = 1e-5;
            auto up = fwd, dn = fwd, up2 = fwd, dn2 = fwd;
            up[j] += h;
            dn[j] -= h;
            up2[j] += 2 * h;
            dn2[j] -= 2 * h;
            const double grad = (8 * (swap_rate_from_forwards(c, up, m, n) - swap_rate_from_forwards(c, dn, m, n)) -
                                 (swap_rate_from_forwards(c, up2, m, n) - swap_rate_from_forwards(c, dn2, m, n))) /
                                (12 * h);
            CHECK(fixtures::rel_err(w.w[j - m], grad * (fwd[j] + delta)) < 1e-8);
        }
    }
}

TEST_CASE("shift infeasibility is reported with the forward index", "[market]") {
    const auto c = load_curve(fixtures::read_text(fixtures::data_path("curve_30pt.csv")));
    REQUIRE(c.forward(1) < 0.0);
    try {
        frozen_weights(c, 0.0, 1, 5);
        FAIL("no throw");
    } catch (const ShiftInfeasible& e) {
        CHECK(e.forward_index() == 1);
    }
}

TEST_CASE("effective coefficients by brute force", "[market]") {
    const auto c = fixtures::curve();
    auto p = fixtures::moderate();
    const std::size_t m = 5, n = 15;
    const auto sw = frozen_weights(c, p.delta, m, n);
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t i = m - j - 1;
        double vx = 0, vy = 0, sum = 0;
        for (std::size_t l = m; l < n; ++l) {
            const double u = c.tenor(l) - c.tenor(i);
            const double g = (p.b * u + p.a) * std::exp(-p.c * u) + p.d;
            const double phi = std::numbers::pi / 2 * static_cast<double>(l - i) / (c.forward_count() - 1.0);
            vx += sw.w[l - m] * g * std::cos(phi);
            vy += sw.w[l - m] * g * std::sin(phi);
            sum += sw.w[l - m] * g;
        }
        const auto bk = effective_coefficients(c, p, sw, j);
        CHECK(bk.lambda == Approx(std::hypot(vx, vy)).epsilon(1e-13));
        CHECK(bk.rho == Approx(p.rho * sum / std::hypot(vx, vy)).epsilon(1e-13));
        CHECK(bk.length == Approx(1.0));
        CHECK(bk.lambda >= 0.0);
    }
}

TEST_CASE("collinear factors reduce rho to the parameter", "[market]") {
    const auto c = fixtures::curve();
    auto p = fixtures::moderate();
    std::fill(p.factor_angles.begin(), p.factor_angles.end(), 0.3);
    const auto sw = frozen_weights(c, p.delta, 5, 15);
    for (std::size_t j = 0; j < 5; ++j) {
        const auto bk = effective_coefficients(c, p, sw, j);
        CHECK(bk.rho == Approx(p.rho).epsilon(1e-14));
    }
}

TEST_CASE("zero vol-of-vol gives xi = 1", "[market]") {
    const auto c = fixtures::curve();
    auto p = fixtures::moderate();
    p.epsilon = 0.0;
    const auto sw = frozen_weights(c, p.delta, 10, 30);
    for (std::size_t j = 0; j < 10; ++j) CHECK(effective_coefficients(c, p, sw, j).xi == 1.0);
}

TEST_CASE("default factor angle ladder", "[market]") {
    const auto a = default_factor_angles(5);
    CHECK(a.front() == 0.0);
    CHECK(a.back() == Approx(std::numbers::pi / 2));
    const auto p = fixtures::moderate();
    for (std::size_t k = 1; k <= p.factor_angles.size(); k += 7) {
        const auto b = p.beta(k);
        CHECK(std::hypot(b[0], b[1]) == Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("parameter admissibility", "[market]") {
    ModelParams p;
    CHECK_NOTHROW(p.validate());
    p.epsilon = 2.0;  // Feller: 2 * 0.6 * 1 = 1.2 < 4
    CHECK_THROWS_AS(p.validate(), InvalidParameters);
    p = ModelParams{};
    p.rho = 1.0;
    CHECK_THROWS_AS(p.validate(), InvalidParameters);
    p = ModelParams{};
    p.a = -0.1;
    CHECK_THROWS_AS(p.validate(), InvalidParameters);
    CHECK_THROWS_AS(build_swap_geometry(fixtures::curve(), ModelParams{}, 5, 5), InvalidParameters);
    CHECK_THROWS_AS(build_swap_geometry(fixtures::curve(), ModelParams{}, 0, 5), InvalidParameters);
}
