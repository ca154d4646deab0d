#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "ddsv/market.hpp"

namespace fixtures {

inline std::string data_path(const std::string& name) { return std::string(DDSV_DATA_DIR) + "/" + name; }

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline ddsv::YieldCurve curve() {
    static const ddsv::YieldCurve c = ddsv::load_curve(read_text(data_path("curve.csv")), "curve.csv");
    return c;
}

/// The moderate parameter set used across fixtures (defaults of ModelParams).
inline ddsv::ModelParams moderate() { return ddsv::with_default_angles(ddsv::ModelParams{}, curve()); }

inline ddsv::YieldCurve flat_curve(double rate, std::size_t points, double step = 1.0) {
    std::vector<double> t, p;
    for (std::size_t i = 0; i < points; ++i) {
        t.push_back(step * static_cast<double>(i));
        p.push_back(std::exp(-rate * t.back()));
    }
    return ddsv::YieldCurve(t, p);
}

inline double rel_err(double x, double ref) { return std::abs(x - ref) / std::max(std::abs(ref), 1e-300); }

/// A random admissible draw: Feller holds, |ρ| ≤ 0.9, ε ≤ 0.6, expiry 1..20y.
struct Draw {
    ddsv::ModelParams params;
    std::size_t m = 1;
    std::size_t n = 2;
};

class ParamGen {
public:
    explicit ParamGen(std::uint64_t seed) : gen_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    std::size_t pick(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(gen_);
    }

    ddsv::ModelParams params(double eps_cap = 0.6, double rho_cap = 0.9) {
        ddsv::ModelParams p;
        p.a = uniform(0.0, 0.3);
        p.b = uniform(0.0, 0.4);
        p.c = uniform(0.1, 1.5);
        p.d = uniform(0.05, 0.3);
        p.kappa = uniform(0.2, 2.0);
        p.theta = uniform(0.5, 2.0);
        p.epsilon = uniform(0.05, std::min(eps_cap, 0.95 * std::sqrt(2.0 * p.kappa * p.theta)));
        p.rho = uniform(-rho_cap, rho_cap);
        p.delta = uniform(0.01, 0.08);
        p.v0 = uniform(0.5, 1.5);
        return ddsv::with_default_angles(p, curve());
    }

    /// Draw whose geometry has strictly positive ξ on every bucket.
    Draw draw(std::size_t max_expiry = 20, std::size_t max_tenor = 20) {
        while (true) {
            Draw d{params(), pick(1, max_expiry), 0};
            d.n = d.m + pick(1, max_tenor);
            const auto geom = ddsv::build_swap_geometry(curve(), d.params, d.m, d.n);
            bool ok = true;
            for (const auto& b : geom.buckets) ok = ok && b.xi > 0.2;
            if (ok) return d;
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace fixtures
