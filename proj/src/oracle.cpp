#include "ddsv/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ddsv/error.hpp"

namespace ddsv::oracle {

namespace {

// Neumaier-compensated running sum.
struct CompensatedSum {
    double sum = 0.0;
    double c = 0.0;

    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            c += (sum - t) + x;
        else
            c += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + c; }
};

// Gauss-Legendre nodes and weights on [-1, 1] for the supported orders.
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

template <unsigned N>
GaussRule make_rule() {
    using G = boost::math::quadrature::gauss<double, N>;
    GaussRule r;
    const auto& abs = G::abscissa();
    const auto& wts = G::weights();
    for (std::size_t i = 0; i < abs.size(); ++i) {
        if (abs[i] == 0.0) {
            r.x.push_back(0.0);
            r.w.push_back(wts[i]);
            continue;
        }
        r.x.push_back(-abs[i]);
        r.w.push_back(wts[i]);
        r.x.push_back(abs[i]);
        r.w.push_back(wts[i]);
    }
    return r;
}

const GaussRule& gauss_rule(int order) {
    static const GaussRule r8 = make_rule<8>();
    static const GaussRule r16 = make_rule<16>();
    static const GaussRule r32 = make_rule<32>();
    switch (order) {
        case 8: return r8;
        case 16: return r16;
        case 32: return r32;
        default: throw InputError("contour: panel order must be 8, 16 or 32");
    }
}

void check_config(const ContourConfig& cfg) {
    if (!(cfg.alpha != 0.0) || !std::isfinite(cfg.alpha))
        throw InputError("contour: alpha must be finite and non-zero");
    gauss_rule(cfg.panel_order);
    if (cfg.panel_order * cfg.unit_panels < 64)
        throw InputError("contour: fewer than 64 quadrature nodes before the tail");
    if (!(cfg.tail_tolerance > 0.0) || !(cfg.max_bound > cfg.unit_panels))
        throw InputError("contour: bad tolerance or truncation bound");
}

// ψ of X = (R - R(0))/scale at complex argument w; the z R(0) factor cancels.
cplx standardized_mgf(const SwapGeometry& geom, const ModelParams& params, double scale, cplx w) {
    const auto v = solve_order0(geom, params, w / scale);
    return std::exp(v.A + v.B * params.v0);
}

// On the real segment [0, alpha] inside the strip, ln ψ_X is finite, convex and
// minimal at 0 (X is centred). Past a moment explosion the closed form runs onto
// another branch and one of these breaks.
void probe_strip(const SwapGeometry& geom, const ModelParams& params, double scale,
                 double alpha) {
    constexpr int samples = 16;
    std::array<double, samples + 1> f{};
    bool ok = true;
    try {
        for (int k = 1; k <= samples && ok; ++k) {
            const auto v = solve_order0(geom, params, alpha * k / samples / scale);
            f[k] = v.A + v.B * params.v0;
            ok = std::isfinite(f[k]);
        }
    } catch (const NumericalError&) {
        ok = false;
    }
    for (int k = 1; k <= samples && ok; ++k) {
        const double tol = 1e-9 * (1.0 + std::abs(f[k]));
        ok = f[k] >= f[k - 1] - tol;
        if (k >= 2) ok = ok && f[k] - 2.0 * f[k - 1] + f[k - 2] >= -tol;
    }
    if (!ok)
        throw ContourError("contour: alpha = " + std::to_string(alpha) +
                           " lies outside the MGF strip; try a smaller |alpha|");
}

// (1/π) ∫_0^∞ Re[e^{-w k} ψ_X(w) / w²] du along w = alpha + iu, for every k at once.
std::vector<double> unit_integrals(const SwapGeometry& geom, const ModelParams& params,
                                   double scale, std::span<const double> ks,
                                   const ContourConfig& cfg) {
    check_config(cfg);
    probe_strip(geom, params, scale, cfg.alpha);

    const GaussRule& rule = gauss_rule(cfg.panel_order);
    const double alpha = cfg.alpha;
    std::vector<CompensatedSum> sums(ks.size());
    std::vector<double> damp(ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) damp[i] = std::exp(-alpha * ks[i]);
    const double max_damp = ks.empty() ? 1.0 : *std::max_element(damp.begin(), damp.end());

    std::vector<double> panel(ks.size());
    double lo = 0.0;
    double width = 1.0;
    int count = 0;
    while (true) {
        const double hi = lo + width;
        if (hi > cfg.max_bound)
            throw ContourError("contour: tail did not decay below tolerance before u = " +
                               std::to_string(cfg.max_bound));
        std::fill(panel.begin(), panel.end(), 0.0);
        for (std::size_t q = 0; q < rule.x.size(); ++q) {
            const double u = lo + 0.5 * width * (rule.x[q] + 1.0);
            const cplx w{alpha, u};
            const cplx g = standardized_mgf(geom, params, scale, w) / (w * w);
            const double wq = 0.5 * width * rule.w[q];
            for (std::size_t i = 0; i < ks.size(); ++i)
                panel[i] += wq * (std::exp(-w * ks[i]) * g).real();
        }
        double largest = 0.0;
        for (std::size_t i = 0; i < ks.size(); ++i) {
            sums[i].add(panel[i]);
            largest = std::max(largest, std::abs(panel[i]));
        }
        ++count;
        lo = hi;
        if (count >= cfg.unit_panels) {
            const cplx w_end{alpha, lo};
            const double tail =
                max_damp * std::abs(standardized_mgf(geom, params, scale, w_end) / (w_end * w_end));
            if (tail < cfg.tail_tolerance && largest < cfg.tail_tolerance) break;
            width *= 2.0;
        }
    }

    std::vector<double> out(ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) out[i] = sums[i].value() / std::numbers::pi;
    return out;
}

double scale_for(const SwapGeometry& geom, const ModelParams& params) {
    const double var = integrated_variance(geom, params);
    if (!(var > 0.0)) throw ContourError("contour: non-positive integrated variance");
    return std::sqrt(var);
}

}  // namespace

double contour_unit_integral(const SwapGeometry& geom, const ModelParams& params, double scale,
                             double k, const ContourConfig& cfg) {
    const double ks[] = {k};
    return unit_integrals(geom, params, scale, ks, cfg).front();
}

std::vector<SwaptionPrice> contour_prices(const SwapGeometry& geom, const ModelParams& params,
                                          std::span<const double> strikes,
                                          const ContourConfig& cfg) {
    const double scale = scale_for(geom, params);
    std::vector<double> ks(strikes.size());
    for (std::size_t i = 0; i < strikes.size(); ++i) ks[i] = (strikes[i] - geom.swap_rate) / scale;
    const auto unit = unit_integrals(geom, params, scale, ks, cfg);

    std::vector<SwaptionPrice> out;
    out.reserve(strikes.size());
    for (std::size_t i = 0; i < strikes.size(); ++i) {
        double price = geom.annuity * scale * unit[i];
        if (cfg.alpha < 0.0) price = price + geom.annuity * (geom.swap_rate - strikes[i]);
        out.push_back(SwaptionPrice{price, Engine::contour, ks[i], price < 0.0});
    }
    return out;
}

SwaptionPrice contour_price(const SwapGeometry& geom, const ModelParams& params, double strike,
                            const ContourConfig& cfg) {
    const double strikes[] = {strike};
    return contour_prices(geom, params, strikes, cfg).front();
}

RiccatiValue<cplx> riccati_rk4(const SwapGeometry& geom, const ModelParams& params, cplx z,
                               double rel_tol) {
    const double eps2 = params.epsilon * params.epsilon;
    const double kt = params.kappa * params.theta;
    RiccatiValue<cplx> y;

    for (std::size_t j = 0; j < geom.buckets.size(); ++j) {
        const Bucket& bk = geom.buckets[j];
        const cplx lin = params.epsilon * bk.rho * bk.lambda * z - params.kappa * bk.xi;
        const cplx src = 0.5 * bk.lambda * bk.lambda * z * z;
        auto rhs = [&](const RiccatiValue<cplx>& s) {
            return RiccatiValue<cplx>{kt * s.B, 0.5 * eps2 * s.B * s.B + lin * s.B + src};
        };
        auto step = [&](const RiccatiValue<cplx>& s, double h) {
            const auto k1 = rhs(s);
            const auto k2 = rhs({s.A + 0.5 * h * k1.A, s.B + 0.5 * h * k1.B});
            const auto k3 = rhs({s.A + 0.5 * h * k2.A, s.B + 0.5 * h * k2.B});
            const auto k4 = rhs({s.A + h * k3.A, s.B + h * k3.B});
            return RiccatiValue<cplx>{s.A + h / 6.0 * (k1.A + 2.0 * k2.A + 2.0 * k3.A + k4.A),
                                      s.B + h / 6.0 * (k1.B + 2.0 * k2.B + 2.0 * k3.B + k4.B)};
        };

        const double length = bk.length;
        const double min_step = 1e-13 * std::max(length, 1.0);
        double t = 0.0;
        double h = std::min(length, 0.05);
        while (t < length) {
            h = std::min(h, length - t);
            if (h < min_step)
                throw StiffnessError("rk4: step size underflow in bucket " + std::to_string(j));
            const auto full = step(y, h);
            const auto half = step(step(y, 0.5 * h), 0.5 * h);
            const double err = std::max(std::abs(half.A - full.A), std::abs(half.B - full.B)) / 15.0;
            const double scale = std::max({std::abs(half.A), std::abs(half.B), 1e-300});
            const double tol = rel_tol * 1e-2 * scale;
            if (err <= tol || h <= min_step) {
                t += h;
                // local Richardson correction of the doubled step
                y.A = half.A + (half.A - full.A) / 15.0;
                y.B = half.B + (half.B - full.B) / 15.0;
                const double grow = err > 0.0 ? 0.9 * std::pow(tol / err, 0.2) : 4.0;
                h *= std::clamp(grow, 0.2, 4.0);
            } else {
                h *= std::clamp(0.9 * std::pow(tol / err, 0.2), 0.1, 0.5);
            }
            if (!std::isfinite(y.A.real()) || !std::isfinite(y.B.real()) ||
                !std::isfinite(y.A.imag()) || !std::isfinite(y.B.imag()))
                throw StiffnessError("rk4: solution blew up in bucket " + std::to_string(j));
        }
    }
    return y;
}

std::array<double, 5> fd_cumulants(const SwapGeometry& geom, const ModelParams& params) {
    const double scale = std::sqrt(integrated_variance(geom, params));
    auto F = [&](double s) {
        const auto v = solve_order0(geom, params, s / scale);
        return v.A + v.B * params.v0;
    };

    constexpr int levels = 4;
    constexpr double h0 = 0.1;
    std::array<std::array<double, levels>, 5> table{};
    for (int l = 0; l < levels; ++l) {
        const double h = h0 / std::pow(2.0, l);
        const double f0 = F(0.0);
        const double fp1 = F(h), fm1 = F(-h), fp2 = F(2.0 * h), fm2 = F(-2.0 * h);
        table[1][l] = (fp1 - fm1) / (2.0 * h);
        table[2][l] = (fp1 - 2.0 * f0 + fm1) / (h * h);
        table[3][l] = (fp2 - 2.0 * fp1 + 2.0 * fm1 - fm2) / (2.0 * h * h * h);
        table[4][l] = (fp2 - 4.0 * fp1 + 6.0 * f0 - 4.0 * fm1 + fm2) / (h * h * h * h);
    }

    std::array<double, 5> kappa{};
    kappa[0] = F(0.0);
    for (int k = 1; k <= 4; ++k) {
        auto col = table[k];
        // the stencils have even error expansions in h
        for (int j = 1; j < levels; ++j) {
            const double f = std::pow(4.0, j);
            for (int l = levels - 1; l >= j; --l) col[l] = col[l] + (col[l] - col[l - 1]) / (f - 1.0);
        }
        kappa[k] = col[levels - 1] * std::pow(scale, k);
    }
    kappa[1] += geom.swap_rate;
    return kappa;
}

double mgf_fd_derivatives(const SwapGeometry& geom, const ModelParams& params, int k) {
    if (k < 0 || k > 4) throw InputError("mgf_fd_derivatives: order must be in [0, 4]");
    if (k == 0) return 1.0;
    const auto c = fd_cumulants(geom, params);
    const double c1 = c[1], c2 = c[2], c3 = c[3], c4 = c[4];
    switch (k) {
        case 1: return c1;
        case 2: return c2 + c1 * c1;
        case 3: return c3 + 3.0 * c2 * c1 + c1 * c1 * c1;
        default:
            return c4 + 4.0 * c3 * c1 + 3.0 * c2 * c2 + 6.0 * c2 * c1 * c1 + c1 * c1 * c1 * c1;
    }
}

double quadrature_payoff_price(const std::function<double(double)>& density,
                               const SwapGeometry& geom, const ExpansionMoments& m, double strike) {
    const double zk = (strike - m.r0) / m.nu;
    auto f = [&](double z) { return (z - zk) * density(z); };
    const double upper = std::max(zk, 0.0) + 12.0;
    double err = 0.0;
    const double unit = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, zk, upper, 15, 1e-15, &err);
    return m.nu * geom.annuity * unit;
}

double integrated_variance(const SwapGeometry& geom, const ModelParams& params) {
    // Calendar intervals run forward from t = 0; backward bucket j = m-1-i.
    double ev = params.v0;
    double total = 0.0;
    for (std::size_t i = 0; i < geom.buckets.size(); ++i) {
        const Bucket& bk = geom.buckets[geom.buckets.size() - 1 - i];
        const double r = params.kappa * bk.xi;  // mean-reversion rate of E[V]
        const double drift = params.kappa * params.theta;
        const double len = bk.length;
        double integral;
        double next;
        const double x = r * len;
        if (std::abs(x) < 1e-6) {
            // E[V](t) ≈ ev + (drift - r ev) t to second order
            integral = ev * len + 0.5 * (drift - r * ev) * len * len * (1.0 - x / 3.0);
            next = ev + (drift - r * ev) * len * (1.0 - x / 2.0);
        } else {
            const double steady = drift / r;
            const double decay = -std::expm1(-x) / r;  // (1 - e^{-r len}) / r
            integral = steady * len + (ev - steady) * decay;
            next = steady + (ev - steady) * std::exp(-x);
        }
        total += bk.lambda * bk.lambda * integral;
        ev = next;
    }
    return total;
}

}  // namespace ddsv::oracle
