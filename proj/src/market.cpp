#include "ddsv/market.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <set>
#include <tuple>

#include "ddsv/csv.hpp"
#include "ddsv/error.hpp"

namespace ddsv {

namespace {

constexpr double grid_tolerance = 1e-9;

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

}  // namespace

// ---------------------------------------------------------------- YieldCurve

YieldCurve::YieldCurve(std::vector<double> tenors, std::vector<double> discounts)
    : tenors_(std::move(tenors)), discounts_(std::move(discounts)) {
    if (tenors_.size() != discounts_.size())
        throw InvalidParameters("curve: tenor and discount counts differ");
    if (tenors_.size() < 2) throw InvalidParameters("curve: need at least two grid points");
    if (tenors_.front() != 0.0 || std::abs(discounts_.front() - 1.0) > 1e-12)
        throw InvalidParameters("curve: first grid point must be tenor 0 with discount 1");
    for (std::size_t i = 0; i < tenors_.size(); ++i) {
        if (!(discounts_[i] > 0.0) || !std::isfinite(discounts_[i]))
            throw InvalidParameters("curve: non-positive discount at point " + std::to_string(i));
        if (i > 0 && !(tenors_[i] > tenors_[i - 1]))
            throw InvalidParameters("curve: grid not strictly increasing at point " + std::to_string(i));
    }
}

double YieldCurve::forward(std::size_t j) const {
    return (discounts_.at(j) / discounts_.at(j + 1) - 1.0) / accrual(j);
}

std::optional<std::size_t> YieldCurve::index_of(double t) const {
    const auto it = std::lower_bound(tenors_.begin(), tenors_.end(), t - grid_tolerance);
    if (it != tenors_.end() && std::abs(*it - t) <= grid_tolerance)
        return static_cast<std::size_t>(it - tenors_.begin());
    return std::nullopt;
}

// ---------------------------------------------------------------- VolSurface

VolSurface::VolSurface(std::vector<SwaptionQuote> quotes) : quotes_(std::move(quotes)) {
    std::set<std::tuple<double, double, double>> seen;
    for (const auto& q : quotes_) {
        if (!(q.normal_vol > 0.0)) throw InvalidParameters("vol surface: non-positive normal vol");
        const double offset = q.atm ? 0.0 : q.strike_offset_bp;
        if (!seen.emplace(q.expiry, q.tenor, offset).second)
            throw InvalidParameters("vol surface: duplicate quote");
    }
}

// ---------------------------------------------------------------- ModelParams

double ModelParams::vol_level(double u) const { return (b * u + a) * std::exp(-c * u) + d; }

std::array<double, 2> ModelParams::beta(std::size_t k) const {
    if (k == 0 || k > factor_angles.size())
        throw InvalidParameters("factor angle beta_" + std::to_string(k) + " not configured");
    const double phi = factor_angles[k - 1];
    return {std::cos(phi), std::sin(phi)};
}

void ModelParams::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw InvalidParameters(std::string("model params: ") + what);
    };
    for (double v : {a, b, c, d, kappa, theta, epsilon, rho, delta, v0})
        require(std::isfinite(v), "non-finite value");
    require(a >= 0 && b >= 0 && c >= 0 && d >= 0, "g-function coefficients must be non-negative");
    require(kappa > 0, "kappa must be positive");
    require(theta > 0, "theta must be positive");
    require(epsilon > 0, "epsilon must be positive");
    require(rho > -1 && rho < 1, "rho must lie in (-1, 1)");
    require(delta >= 0, "delta must be non-negative");
    require(v0 > 0, "v0 must be positive");
    require(2 * kappa * theta > epsilon * epsilon, "Feller condition 2 kappa theta > epsilon^2 violated");
    for (double phi : factor_angles) require(std::isfinite(phi), "non-finite factor angle");
}

std::vector<double> default_factor_angles(std::size_t count) {
    std::vector<double> angles(count, 0.0);
    if (count < 2) return angles;
    for (std::size_t k = 1; k <= count; ++k)
        angles[k - 1] = std::numbers::pi / 2 * static_cast<double>(k - 1) / static_cast<double>(count - 1);
    return angles;
}

ModelParams with_default_angles(ModelParams params, const YieldCurve& curve) {
    if (params.factor_angles.empty()) params.factor_angles = default_factor_angles(curve.forward_count());
    return params;
}

// ---------------------------------------------------------------- loaders

YieldCurve load_curve(std::string_view csv_text, const std::string& source) {
    const auto table = csv::parse(csv_text, source);
    const auto tc = table.column("tenor", source);
    const auto dc = table.column("discount", source);
    std::vector<double> tenors, discounts;
    for (const auto& row : table.rows) {
        const double t = csv::to_double(row.cells[tc], source, row.line, "tenor");
        const double p = csv::to_double(row.cells[dc], source, row.line, "discount");
        if (tenors.empty() && (t != 0.0 || std::abs(p - 1.0) > 1e-12))
            throw ParseError(source, row.line, "first grid point must be tenor 0 with discount 1");
        if (!tenors.empty() && !(t > tenors.back()))
            throw ParseError(source, row.line, "non-monotone tenor grid");
        if (!(p > 0.0)) throw ParseError(source, row.line, "non-positive discount");
        tenors.push_back(t);
        discounts.push_back(p);
    }
    if (tenors.size() < 2) throw ParseError(source, 0, "need at least two grid points");
    return YieldCurve(std::move(tenors), std::move(discounts));
}

VolSurface load_vols(std::string_view csv_text, const std::string& source) {
    const auto table = csv::parse(csv_text, source);
    const auto ec = table.column("expiry", source);
    const auto tc = table.column("tenor", source);
    const auto sc = table.column("strike_offset_bp", source);
    const auto vc = table.column("normal_vol_bp", source);
    std::vector<SwaptionQuote> quotes;
    std::set<std::tuple<double, double, double>> seen;
    for (const auto& row : table.rows) {
        SwaptionQuote q;
        q.expiry = csv::to_double(row.cells[ec], source, row.line, "expiry");
        q.tenor = csv::to_double(row.cells[tc], source, row.line, "tenor");
        if (!(q.expiry > 0) || !(q.tenor > 0))
            throw ParseError(source, row.line, "expiry and tenor must be positive");
        if (iequals(row.cells[sc], "ATM")) {
            q.atm = true;
            q.strike_offset_bp = 0.0;
        } else {
            q.atm = false;
            q.strike_offset_bp = csv::to_double(row.cells[sc], source, row.line, "strike_offset_bp");
        }
        const double vol_bp = csv::to_double(row.cells[vc], source, row.line, "normal_vol_bp");
        if (!(vol_bp > 0)) throw ParseError(source, row.line, "normal vol must be positive");
        q.normal_vol = vol_bp * 1e-4;
        if (!seen.emplace(q.expiry, q.tenor, q.strike_offset_bp).second)
            throw ParseError(source, row.line, "duplicate (expiry, tenor, strike_offset) key");
        quotes.push_back(q);
    }
    return VolSurface(std::move(quotes));
}

// ---------------------------------------------------------------- geometry

SwapWeights frozen_weights(const YieldCurve& curve, double delta, std::size_t m, std::size_t n) {
    if (m < 1 || m >= n || n > curve.forward_count())
        throw InvalidParameters("swap indices require 1 <= m < n <= M (m=" + std::to_string(m) +
                                ", n=" + std::to_string(n) + ")");
    SwapWeights sw;
    sw.m = m;
    sw.n = n;
    const std::size_t count = n - m;
    for (std::size_t j = m; j < n; ++j) sw.annuity += curve.accrual(j) * curve.discount(j + 1);
    sw.swap_rate = (curve.discount(m) - curve.discount(n)) / sw.annuity;

    sw.alpha.resize(count);
    sw.dR_dF.resize(count);
    sw.w.resize(count);
    for (std::size_t j = m; j < n; ++j)
        sw.alpha[j - m] = curve.accrual(j) * curve.discount(j + 1) / sw.annuity;

    double tail = 0.0;  // Σ_{k=m}^{j-1} α_k (F_k - R)
    for (std::size_t j = m; j < n; ++j) {
        const double fwd = curve.forward(j);
        const double shifted = fwd + delta;
        if (!(shifted > 0.0)) throw ShiftInfeasible(j, shifted);
        const double dt = curve.accrual(j);
        sw.dR_dF[j - m] = sw.alpha[j - m] + dt / (1.0 + dt * fwd) * tail;
        sw.w[j - m] = sw.dR_dF[j - m] * shifted;
        tail += sw.alpha[j - m] * (fwd - sw.swap_rate);
    }
    return sw;
}

Bucket effective_coefficients(const YieldCurve& curve, const ModelParams& params,
                              const SwapWeights& weights, std::size_t j) {
    const std::size_t m = weights.m;
    const std::size_t n = weights.n;
    if (j >= m) throw InvalidParameters("bucket index out of range");
    const std::size_t i = m - j - 1;  // calendar interval [T_i, T_{i+1})
    const double t_i = curve.tenor(i);

    Bucket bucket;
    bucket.length = curve.tenor(i + 1) - t_i;

    double vx = 0.0, vy = 0.0, weighted_norms = 0.0;
    for (std::size_t l = m; l < n; ++l) {
        const double g = params.vol_level(curve.tenor(l) - t_i);
        const auto beta = params.beta(l - i + 1);
        const double wg = weights.w[l - m] * g;
        vx += wg * beta[0];
        vy += wg * beta[1];
        weighted_norms += wg;
    }
    bucket.lambda = std::hypot(vx, vy);
    bucket.rho = bucket.lambda > 0.0 ? params.rho * weighted_norms / bucket.lambda : params.rho;

    // ξ̃: alive forwards start at m(t) = i + 1.
    double drift = 0.0;
    double cumulative = 0.0;
    for (std::size_t k = i + 1; k < n; ++k) {
        const double fwd = curve.forward(k);
        const double dt = curve.accrual(k);
        cumulative += dt * (fwd + params.delta) * params.rho * params.vol_level(curve.tenor(k) - t_i) /
                      (1.0 + dt * fwd);
        if (k >= m) drift += weights.alpha[k - m] * cumulative;
    }
    bucket.xi = 1.0 + params.epsilon / params.kappa * drift;
    return bucket;
}

SwapGeometry build_swap_geometry(const YieldCurve& curve, const ModelParams& params, std::size_t m,
                                 std::size_t n) {
    params.validate();
    const ModelParams p = with_default_angles(params, curve);
    const SwapWeights sw = frozen_weights(curve, p.delta, m, n);

    SwapGeometry geom;
    geom.m = m;
    geom.n = n;
    geom.expiry = curve.tenor(m);
    geom.annuity = sw.annuity;
    geom.swap_rate = sw.swap_rate;
    geom.alpha = sw.alpha;
    geom.w = sw.w;
    geom.buckets.reserve(m);
    for (std::size_t j = 0; j < m; ++j) geom.buckets.push_back(effective_coefficients(curve, p, sw, j));
    return geom;
}

}  // namespace ddsv
