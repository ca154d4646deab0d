#include "ddsv/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "ddsv/error.hpp"
#include "ddsv/pricing.hpp"

namespace ddsv::mc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Generator for one stream (a path, or an antithetic pair).
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64{splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL))};
}

struct Step {
    double lambda_sqrt_dt;
    double decay;      // e^{-κξ dt}
    double mean_add;   // θ/ξ (1 - decay)
    double var_lin;    // ε² decay (1 - decay) / (κξ), times V
    double var_const;  // θ/ξ ε² (1 - decay)² / (2κξ)
    double rho;
    double rho_bar;
};

// ln V advances by a normal increment whose first two moments match the exact
// conditional CIR mean and variance of V; as dt → 0 this is the Euler step on ln V.
Step make_step(const Bucket& bk, const ModelParams& p, double dt) {
    const double k = p.kappa * bk.xi;
    const double one_minus = -std::expm1(-k * dt);
    const double ratio = k > 1e-12 ? one_minus / k : dt;
    const double eps2 = p.epsilon * p.epsilon;
    const double rho = std::clamp(bk.rho, -1.0, 1.0);
    return Step{bk.lambda * std::sqrt(dt),
                1.0 - one_minus,
                p.kappa * p.theta * ratio,
                eps2 * (1.0 - one_minus) * ratio,
                0.5 * p.kappa * p.theta * eps2 * ratio * ratio,
                rho,
                std::sqrt(std::max(0.0, 1.0 - rho * rho))};
}

struct Schedule {
    std::vector<Step> steps;
};

Schedule build_schedule(const SwapGeometry& geom, const ModelParams& p, int steps_per_year) {
    Schedule s;
    const std::size_t m = geom.buckets.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Bucket& bk = geom.buckets[m - 1 - i];
        const auto n = std::max<long>(1, std::lround(std::ceil(bk.length * steps_per_year - 1e-9)));
        const double dt = bk.length / static_cast<double>(n);
        const Step st = make_step(bk, p, dt);
        for (long k = 0; k < n; ++k) s.steps.push_back(st);
    }
    return s;
}

struct IncrementStats {
    double n = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;

    void add(double x, double y) {
        n += 1;
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    void merge(const IncrementStats& o) {
        n += o.n;
        sx += o.sx;
        sy += o.sy;
        sxx += o.sxx;
        syy += o.syy;
        sxy += o.sxy;
    }
};

// One path driven by `sign` times the stream's normals.
double run_path(const Schedule& sch, double r0, double v0, std::mt19937_64& gen,
                std::vector<double>& normals, bool replay, double sign, IncrementStats* stats) {
    std::normal_distribution<double> normal;
    if (!replay) {
        normals.resize(2 * sch.steps.size());
        for (double& z : normals) z = normal(gen);
    }
    double r = r0;
    double v = v0;
    for (std::size_t k = 0; k < sch.steps.size(); ++k) {
        const Step& st = sch.steps[k];
        const double z1 = sign * normals[2 * k];
        const double z2 = sign * normals[2 * k + 1];
        const double sv = std::sqrt(v);
        const double dr = st.lambda_sqrt_dt * sv * z1;
        const double mean = v * st.decay + st.mean_add;
        const double g2 = std::log1p((v * st.var_lin + st.var_const) / (mean * mean));
        const double vn = mean * std::exp(-0.5 * g2 + std::sqrt(g2) * (st.rho * z1 + st.rho_bar * z2));
        if (stats) stats->add(dr, vn - v);
        r += dr;
        v = vn;
    }
    return r;
}

template <class Fn>
void parallel_blocks(std::size_t units, unsigned workers, Fn fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(units, 1))));
    if (workers == 1) {
        fn(0, units, 0u);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (units + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = std::min(units, w * chunk);
        const std::size_t hi = std::min(units, lo + chunk);
        pool.emplace_back([=, &fn] { fn(lo, hi, w); });
    }
    for (auto& t : pool) t.join();
}

Sample simulate(const SwapGeometry& geom, const ModelParams& params, const SimConfig& cfg,
                std::vector<IncrementStats>* stats) {
    cfg.validate();
    params.validate();
    const Schedule sch = build_schedule(geom, params, cfg.steps_per_year);
    Sample out;
    out.antithetic = cfg.antithetic;
    out.values.assign(cfg.paths, 0.0);
    const std::size_t per_stream = cfg.antithetic ? 2 : 1;
    const std::size_t streams = cfg.paths / per_stream;
    if (stats) stats->assign(std::max(1u, cfg.workers), IncrementStats{});

    parallel_blocks(streams, cfg.workers, [&](std::size_t lo, std::size_t hi, unsigned w) {
        std::vector<double> normals;
        IncrementStats* st = stats ? &(*stats)[w] : nullptr;
        for (std::size_t s = lo; s < hi; ++s) {
            auto gen = stream(cfg.seed, s);
            out.values[per_stream * s] =
                run_path(sch, geom.swap_rate, params.v0, gen, normals, false, 1.0, st);
            if (cfg.antithetic)
                out.values[per_stream * s + 1] =
                    run_path(sch, geom.swap_rate, params.v0, gen, normals, true, -1.0, st);
        }
    });
    return out;
}

double mean_of(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

// Mean and standard error over i.i.d. units: single paths, or antithetic pair averages.
std::pair<double, double> mean_and_stderr(const Sample& sample, auto payoff) {
    const auto& x = sample.values;
    const std::size_t group = sample.antithetic && x.size() % 2 == 0 ? 2 : 1;
    const std::size_t n = x.size() / group;
    std::vector<double> units(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t g = 0; g < group; ++g) s += payoff(x[group * i + g]);
        units[i] = s / static_cast<double>(group);
    }
    const double mean = mean_of(units);
    if (n < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double u : units) ss += (u - mean) * (u - mean);
    return {mean, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))};
}

double implied_or_zero(double unit_price, double forward, double strike) {
    if (!(unit_price > std::max(forward - strike, 0.0))) return 0.0;
    try {
        return bachelier_implied_std(unit_price, forward, strike);
    } catch (const InversionError&) {
        return 0.0;
    }
}

}  // namespace

void SimConfig::validate() const {
    if (paths < 2) throw InputError("monte carlo: at least 2 paths required");
    if (steps_per_year < 4) throw InputError("monte carlo: steps_per_year must be >= 4");
    if (antithetic && paths % 2 != 0)
        throw InputError("monte carlo: antithetic sampling needs an even path count");
}

Sample simulate_swap_rate(const SwapGeometry& geom, const ModelParams& params,
                          const SimConfig& cfg) {
    return simulate(geom, params, cfg, nullptr);
}

double increment_correlation(const SwapGeometry& geom, const ModelParams& params,
                             const SimConfig& cfg) {
    std::vector<IncrementStats> parts;
    simulate(geom, params, cfg, &parts);
    IncrementStats s;
    for (const auto& p : parts) s.merge(p);
    const double cov = s.sxy / s.n - (s.sx / s.n) * (s.sy / s.n);
    const double vx = s.sxx / s.n - (s.sx / s.n) * (s.sx / s.n);
    const double vy = s.syy / s.n - (s.sy / s.n) * (s.sy / s.n);
    return cov / std::sqrt(vx * vy);
}

Estimate mc_price_and_ci(const Sample& sample, const SwapGeometry& geom, double strike,
                         double level) {
    if (sample.values.empty()) throw InputError("monte carlo: empty sample");
    if (!(level > 0.0 && level < 1.0)) throw InputError("monte carlo: CI level must lie in (0, 1)");
    const double zq =
        boost::math::quantile(boost::math::normal_distribution<double>{}, 0.5 + 0.5 * level);
    const double B = geom.annuity;

    const auto [payer, payer_se] =
        mean_and_stderr(sample, [strike](double r) { return std::max(r - strike, 0.0); });
    Estimate e;
    e.price = B * payer;
    e.std_error = B * payer_se;
    e.ci_low = e.price - zq * e.std_error;
    e.ci_high = e.price + zq * e.std_error;
    e.degenerate = !(payer_se > 0.0);

    // Vol interval from the OTM side about the sample mean, where the time
    // value is not swamped by intrinsic noise.
    const double fwd = mean_of(sample.values);
    if (strike >= fwd) {
        e.nu = implied_or_zero(payer, fwd, strike);
        e.nu_low = implied_or_zero(payer - zq * payer_se, fwd, strike);
        e.nu_high = implied_or_zero(payer + zq * payer_se, fwd, strike);
    } else {
        const auto [recv, recv_se] =
            mean_and_stderr(sample, [strike](double r) { return std::max(strike - r, 0.0); });
        // a receiver at K prices like a payer at 2F - K
        const double mirror = 2.0 * fwd - strike;
        e.nu = implied_or_zero(recv, fwd, mirror);
        e.nu_low = implied_or_zero(recv - zq * recv_se, fwd, mirror);
        e.nu_high = implied_or_zero(recv + zq * recv_se, fwd, mirror);
    }
    return e;
}

}  // namespace ddsv::mc
