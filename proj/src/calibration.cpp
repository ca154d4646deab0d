#include "ddsv/calibration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include "ddsv/error.hpp"
#include "ddsv/expansion.hpp"
#include "ddsv/mgf.hpp"
#include "ddsv/pricing.hpp"

namespace ddsv::calib {

std::string_view engine_label(CalibEngine e) {
    switch (e) {
        case CalibEngine::edgeworth_price: return "edgeworth_price";
        case CalibEngine::edgeworth_smile: return "edgeworth_smile";
        case CalibEngine::gram_charlier_price: return "gram_charlier_price";
        case CalibEngine::gram_charlier_smile: return "gram_charlier_smile";
        case CalibEngine::contour: return "contour";
    }
    return "unknown";
}

CalibEngine parse_engine(std::string_view name) {
    for (auto e : {CalibEngine::edgeworth_price, CalibEngine::edgeworth_smile,
                   CalibEngine::gram_charlier_price, CalibEngine::gram_charlier_smile,
                   CalibEngine::contour})
        if (engine_label(e) == name) return e;
    if (name == "edgeworth") return CalibEngine::edgeworth_price;
    if (name == "gram_charlier") return CalibEngine::gram_charlier_price;
    throw InputError("unknown engine '" + std::string(name) + "'");
}

ParamVector to_vector(const ModelParams& p) {
    return {p.a, p.b, p.c, p.d, p.kappa, p.theta, p.epsilon, p.rho, p.delta};
}

ModelParams from_vector(const ParamVector& x, ModelParams base) {
    base.a = x[a];
    base.b = x[b];
    base.c = x[c];
    base.d = x[d];
    base.kappa = x[kappa];
    base.theta = x[theta];
    base.epsilon = x[epsilon];
    base.rho = x[rho];
    base.delta = x[delta];
    return base;
}

// ---------------------------------------------------------------- instruments

namespace {

std::vector<InstrumentGroup> group_quotes(const YieldCurve& curve,
                                          const std::vector<SwaptionQuote>& quotes) {
    std::vector<InstrumentGroup> groups;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> slot;
    for (std::size_t q = 0; q < quotes.size(); ++q) {
        const auto& quote = quotes[q];
        const auto m = curve.index_of(quote.expiry);
        const auto n = curve.index_of(quote.expiry + quote.tenor);
        if (!m || !n || *m == 0 || *n <= *m)
            throw InputError("quote " + std::to_string(q + 1) + " (expiry " +
                             std::to_string(quote.expiry) + ", tenor " + std::to_string(quote.tenor) +
                             ") does not fall on the curve grid");
        const auto key = std::make_pair(*m, *n);
        auto [it, inserted] = slot.emplace(key, groups.size());
        if (inserted) groups.push_back(InstrumentGroup{*m, *n, {}});
        groups[it->second].members.push_back(Instrument{q, *m, *n, 0.0, quote.normal_vol});
    }
    // strikes only need the curve: R(0) does not depend on the model
    for (auto& g : groups) {
        const SwapWeights sw = frozen_weights(curve, 1.0, g.m, g.n);
        for (auto& ins : g.members) {
            const auto& quote = quotes[ins.quote];
            ins.strike = sw.swap_rate + (quote.atm ? 0.0 : quote.strike_offset_bp * 1e-4);
        }
    }
    return groups;
}

template <class Fn>
void for_each_index(std::size_t count, unsigned workers, Fn fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

void price_group(const ModelParams& params, const YieldCurve& curve, const InstrumentGroup& g,
                 CalibEngine engine, const oracle::ContourConfig& contour,
                 std::vector<double>& out) {
    const SwapGeometry geom = build_swap_geometry(curve, params, g.m, g.n);
    const double expiry = geom.expiry;

    if (engine == CalibEngine::contour) {
        std::vector<double> strikes;
        strikes.reserve(g.members.size());
        for (const auto& ins : g.members) strikes.push_back(ins.strike);
        const auto prices = oracle::contour_prices(geom, params, strikes, contour);
        for (std::size_t i = 0; i < g.members.size(); ++i)
            out[g.members[i].quote] =
                annualize(bachelier_implied_vol(geom, prices[i].price, strikes[i]), expiry);
        return;
    }

    const MgfSolution sol = psi_derivatives_at_zero(geom, params);
    const ExpansionMoments mom = standardized_moments(sol);
    for (const auto& ins : g.members) {
        double nu = 0.0;
        switch (engine) {
            case CalibEngine::edgeworth_smile: nu = ew_smile(mom, ins.strike); break;
            case CalibEngine::gram_charlier_smile: nu = gc_smile(mom, ins.strike); break;
            case CalibEngine::edgeworth_price:
                nu = bachelier_implied_vol(geom, ew_price(geom, mom, ins.strike).price, ins.strike);
                break;
            case CalibEngine::gram_charlier_price:
                nu = bachelier_implied_vol(geom, gc_price(geom, mom, ins.strike).price, ins.strike);
                break;
            case CalibEngine::contour: break;
        }
        if (!(nu > 0.0) || !std::isfinite(nu)) throw ExpansionInvalid("non-positive smile vol");
        out[ins.quote] = annualize(nu, expiry);
    }
}

}  // namespace

std::vector<InstrumentGroup> group_instruments(const YieldCurve& curve, const VolSurface& surface) {
    return group_quotes(curve, surface.quotes());
}

std::vector<double> model_vols(const ModelParams& params, const YieldCurve& curve,
                               const std::vector<InstrumentGroup>& groups, std::size_t count,
                               CalibEngine engine, const oracle::ContourConfig& contour,
                               unsigned workers) {
    params.validate();
    const ModelParams p = with_default_angles(params, curve);
    std::vector<double> out(count, std::numeric_limits<double>::quiet_NaN());
    for_each_index(groups.size(), workers,
                   [&](std::size_t i) { price_group(p, curve, groups[i], engine, contour, out); });
    return out;
}

// ---------------------------------------------------------------- objective

double violation(const ParamVector& x, const Bounds& bounds) {
    double v = 0.0;
    for (std::size_t i = 0; i < param_count; ++i) {
        const double width = std::max(bounds.upper[i] - bounds.lower[i], 1e-12);
        v += std::max(0.0, bounds.lower[i] - x[i]) / width;
        v += std::max(0.0, x[i] - bounds.upper[i]) / width;
    }
    const double eps2 = x[epsilon] * x[epsilon];
    v += std::max(0.0, eps2 - 2.0 * x[kappa] * x[theta]) / std::max(eps2, 1e-12);
    return v;
}

namespace {

struct Problem {
    const YieldCurve* curve = nullptr;
    std::vector<InstrumentGroup> groups;
    std::vector<double> market;
    std::vector<double> weights;
    CalibEngine engine = CalibEngine::edgeworth_price;
    oracle::ContourConfig contour;
    Bounds bounds;
    std::array<bool, param_count> fixed{};
    unsigned workers = 1;
};

Problem make_problem(const YieldCurve& curve, const VolSurface& surface, CalibEngine engine,
                     const CalibrationSpec& spec) {
    if (surface.empty()) throw InputError("no instruments");
    Problem pr;
    pr.curve = &curve;
    pr.groups = group_instruments(curve, surface);
    for (const auto& q : surface.quotes()) pr.market.push_back(q.normal_vol);
    pr.weights = spec.weights.empty() ? std::vector<double>(pr.market.size(), 1.0) : spec.weights;
    if (pr.weights.size() != pr.market.size())
        throw InputError("calibration: weight count does not match the surface");
    for (double w : pr.weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("calibration: negative weight");
    pr.engine = engine;
    pr.contour = spec.contour;
    pr.bounds = spec.bounds;
    pr.fixed = spec.fixed;
    pr.workers = spec.workers;
    return pr;
}

ObjectiveValue evaluate(const Problem& pr, const ModelParams& params, unsigned workers) {
    ParamVector x = to_vector(params);
    Bounds box = pr.bounds;
    for (std::size_t i = 0; i < param_count; ++i)
        if (pr.fixed[i]) {
            box.lower[i] = -std::numeric_limits<double>::infinity();
            box.upper[i] = std::numeric_limits<double>::infinity();
        }
    ObjectiveValue ov;
    const double v = violation(x, box);
    if (v > 0.0 || !std::isfinite(v)) {
        ov.penalized = true;
        ov.value = penalty_scale * (1.0 + (std::isfinite(v) ? v : 1e6));
        return ov;
    }
    try {
        ov.model_vols = model_vols(params, *pr.curve, pr.groups, pr.market.size(), pr.engine,
                                   pr.contour, workers);
        ov.residuals.resize(pr.market.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < pr.market.size(); ++i) {
            ov.residuals[i] = std::sqrt(pr.weights[i]) * (ov.model_vols[i] - pr.market[i]);
            sum += ov.residuals[i] * ov.residuals[i];
        }
        if (!std::isfinite(sum)) throw NumericalError("non-finite objective");
        ov.value = sum;
    } catch (const std::exception&) {
        ov = ObjectiveValue{};
        ov.penalized = true;
        ov.value = penalty_scale * 2.0;
    }
    return ov;
}

// ---------------------------------------------------------------- optimizer

struct BudgetExhausted {};

// Objective in normalized coordinates y ∈ [0, 1]^k over the free parameters.
class Evaluator {
public:
    Evaluator(const Problem& pr, const ModelParams& base, std::vector<std::size_t> free,
              std::size_t budget, unsigned workers)
        : pr_(pr), base_(base), free_(std::move(free)), budget_(budget), workers_(workers) {}

    std::size_t dim() const { return free_.size(); }
    std::size_t used() const { return used_; }
    std::size_t remaining() const { return budget_ - used_; }

    ModelParams params_at(const std::vector<double>& y) const {
        ParamVector x = to_vector(base_);
        for (std::size_t i = 0; i < free_.size(); ++i) {
            const std::size_t p = free_[i];
            x[p] = pr_.bounds.lower[p] + y[i] * (pr_.bounds.upper[p] - pr_.bounds.lower[p]);
        }
        return from_vector(x, base_);
    }

    std::vector<double> coords_of(const ModelParams& params) const {
        const ParamVector x = to_vector(params);
        std::vector<double> y(free_.size());
        for (std::size_t i = 0; i < free_.size(); ++i) {
            const std::size_t p = free_[i];
            const double width = pr_.bounds.upper[p] - pr_.bounds.lower[p];
            y[i] = width > 0.0 ? (x[p] - pr_.bounds.lower[p]) / width : 0.0;
        }
        return y;
    }

    double operator()(const std::vector<double>& y) {
        if (used_ >= budget_) throw BudgetExhausted{};
        ++used_;
        const ModelParams p = params_at(y);
        ObjectiveValue ov = evaluate(pr_, p, workers_);
        if (used_ == 1) first_ = ov.value;
        const double v = ov.value;
        if (!has_best_ || v < best_.value) {
            has_best_ = true;
            best_ = std::move(ov);
            best_params_ = p;
        }
        return v;
    }

    // The initial guess itself, unprojected, so out-of-box values score their penalty.
    double evaluate_base() {
        if (used_ >= budget_) throw BudgetExhausted{};
        ++used_;
        ObjectiveValue ov = evaluate(pr_, base_, workers_);
        first_ = ov.value;
        const double v = ov.value;
        if (!has_best_ || v < best_.value) {
            has_best_ = true;
            best_ = std::move(ov);
            best_params_ = base_;
        }
        return v;
    }

    bool has_best() const { return has_best_; }
    const ObjectiveValue& best() const { return best_; }
    const ModelParams& best_params() const { return best_params_; }
    double first() const { return first_; }

private:
    const Problem& pr_;
    ModelParams base_;
    std::vector<std::size_t> free_;
    std::size_t budget_;
    unsigned workers_;
    std::size_t used_ = 0;
    bool has_best_ = false;
    ObjectiveValue best_;
    ModelParams best_params_;
    double first_ = std::numeric_limits<double>::quiet_NaN();
};

void project(std::vector<double>& y) {
    for (double& v : y) v = std::clamp(v, 0.0, 1.0);
}

struct Vertex {
    std::vector<double> y;
    double f = 0.0;
};

// Adaptive Nelder-Mead; returns true when the simplex collapsed below tolerance.
bool nelder_mead(Evaluator& eval, std::vector<double> y0, double f0, double step) {
    const std::size_t k = eval.dim();
    const double n = static_cast<double>(k);
    const double alpha = 1.0, beta = 1.0 + 2.0 / n, gamma = 0.75 - 0.5 / n, sigma = 1.0 - 1.0 / n;

    std::vector<Vertex> s;
    s.push_back({y0, f0});
    for (std::size_t i = 0; i < k; ++i) {
        Vertex v{y0, 0.0};
        v.y[i] += (y0[i] + step <= 1.0) ? step : -step;
        project(v.y);
        v.f = eval(v.y);
        s.push_back(std::move(v));
    }

    auto along = [&](const std::vector<double>& c, const std::vector<double>& to, double t) {
        std::vector<double> r(k);
        for (std::size_t i = 0; i < k; ++i) r[i] = c[i] + t * (to[i] - c[i]);
        project(r);
        return r;
    };

    while (true) {
        std::stable_sort(s.begin(), s.end(), [](const Vertex& l, const Vertex& r) { return l.f < r.f; });
        double fspread = 0.0, xspread = 0.0;
        for (std::size_t i = 1; i <= k; ++i) {
            fspread = std::max(fspread, std::abs(s[i].f - s[0].f));
            for (std::size_t j = 0; j < k; ++j) xspread = std::max(xspread, std::abs(s[i].y[j] - s[0].y[j]));
        }
        if (xspread < 1e-10 || fspread <= 1e-15 * std::abs(s[0].f) + 1e-300) return true;

        std::vector<double> c(k, 0.0);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) c[j] += s[i].y[j] / n;

        Vertex& worst = s[k];
        const auto yr = along(c, worst.y, -alpha);
        const double fr = eval(yr);
        if (fr < s[0].f) {
            const auto ye = along(c, yr, beta);
            const double fe = eval(ye);
            worst = fe < fr ? Vertex{ye, fe} : Vertex{yr, fr};
        } else if (fr < s[k - 1].f) {
            worst = {yr, fr};
        } else {
            const bool outside = fr < worst.f;
            const auto yc = outside ? along(c, yr, gamma) : along(c, worst.y, gamma);
            const double fc = eval(yc);
            if (outside ? fc <= fr : fc < worst.f) {
                worst = {yc, fc};
            } else {
                for (std::size_t i = 1; i <= k; ++i) {
                    s[i].y = along(s[0].y, s[i].y, sigma);
                    s[i].f = eval(s[i].y);
                }
            }
        }
    }
}

struct StartOutcome {
    bool has_best = false;
    ObjectiveValue best;
    ModelParams params;
    std::size_t used = 0;
    double first = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
};

StartOutcome run_start(const Problem& pr, const ModelParams& initial,
                       const std::vector<std::size_t>& free, std::size_t budget,
                       std::optional<std::vector<double>> start_y, unsigned workers) {
    StartOutcome out;
    if (budget == 0) return out;
    Evaluator eval(pr, initial, free, budget, workers);
    try {
        double f0;
        std::vector<double> y0;
        if (start_y) {
            y0 = *start_y;
            project(y0);
            f0 = eval(y0);
        } else {
            f0 = eval.evaluate_base();
            y0 = eval.coords_of(initial);
            project(y0);
        }
        if (!free.empty()) {
            double step = 0.1;
            while (true) {
                out.converged = nelder_mead(eval, y0, f0, step) || out.converged;
                // restart around the best point with a fresh simplex
                const ObjectiveValue& b = eval.best();
                y0 = eval.coords_of(eval.best_params());
                project(y0);
                f0 = b.value;
                step = 0.05;
            }
        }
    } catch (const BudgetExhausted&) {
    }
    out.has_best = eval.has_best();
    out.best = eval.best();
    out.params = eval.best_params();
    out.used = eval.used();
    out.first = eval.first();
    return out;
}

}  // namespace

ObjectiveValue objective(const ModelParams& params, const YieldCurve& curve,
                         const VolSurface& surface, CalibEngine engine,
                         const CalibrationSpec& spec) {
    const Problem pr = make_problem(curve, surface, engine, spec);
    return evaluate(pr, params, spec.workers);
}

CalibrationResult calibrate(const CalibrationSpec& spec, const VolSurface& surface,
                            const YieldCurve& curve) {
    if (spec.budget < 1) throw InputError("calibration: budget must be at least 1");
    if (spec.starts < 1) throw InputError("calibration: at least one start required");
    for (std::size_t i = 0; i < param_count; ++i)
        if (!(spec.bounds.lower[i] <= spec.bounds.upper[i]))
            throw InputError("calibration: empty bounds for " + std::string(param_names[i]));
    const Problem pr = make_problem(curve, surface, spec.engine, spec);

    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < param_count; ++i)
        if (!spec.fixed[i]) free.push_back(i);

    const std::size_t starts = std::min(spec.starts, spec.budget);
    std::vector<std::size_t> budgets(starts, spec.budget / starts);
    budgets[0] += spec.budget % starts;

    // Start 0 is the initial guess; the others are seeded jitters of it.
    std::vector<std::optional<std::vector<double>>> start_points(starts);
    {
        Evaluator probe(pr, spec.initial, free, 0, 1);
        const auto y0 = probe.coords_of(spec.initial);
        for (std::size_t s = 1; s < starts; ++s) {
            std::mt19937_64 gen(spec.seed * 0x9e3779b97f4a7c15ULL + s);
            std::uniform_real_distribution<double> jitter(-0.15, 0.15);
            std::vector<double> y = y0;
            for (double& v : y) v += jitter(gen);
            project(y);
            start_points[s] = y;
        }
    }

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<StartOutcome> outcomes(starts);
    const bool parallel_starts = spec.workers > 1 && starts > 1;
    if (parallel_starts) {
        for_each_index(starts, spec.workers, [&](std::size_t s) {
            outcomes[s] = run_start(pr, spec.initial, free, budgets[s], start_points[s], 1);
        });
    } else {
        for (std::size_t s = 0; s < starts; ++s)
            outcomes[s] = run_start(pr, spec.initial, free, budgets[s], start_points[s], spec.workers);
    }
    const auto t1 = std::chrono::steady_clock::now();

    std::size_t best = starts;
    CalibrationResult res;
    for (std::size_t s = 0; s < starts; ++s) {
        res.evaluations += outcomes[s].used;
        if (outcomes[s].has_best && (best == starts || outcomes[s].best.value < outcomes[best].best.value))
            best = s;
    }
    res.seconds = std::chrono::duration<double>(t1 - t0).count();
    res.initial_objective = outcomes[0].first;
    if (best == starts || outcomes[best].best.penalized)
        throw CalibrationFailed("calibration failed: no admissible point found in " +
                                std::to_string(res.evaluations) + " evaluations (best value " +
                                (best == starts ? std::string("n/a")
                                                : std::to_string(outcomes[best].best.value)) +
                                ")");
    const StartOutcome& win = outcomes[best];
    res.params = win.params;
    res.objective = win.best.value;
    res.residuals = win.best.residuals;
    res.model_vols = win.best.model_vols;
    res.converged = win.converged;
    return res;
}

// ---------------------------------------------------------------- synthetic data

VolSurface synthetic_surface(const YieldCurve& curve, const ModelParams& params,
                             CalibEngine engine, const SurfaceLayout& layout) {
    std::vector<SwaptionQuote> quotes;
    for (double e : layout.expiries)
        for (double t : layout.tenors) {
            quotes.push_back(SwaptionQuote{e, t, true, 0.0, 0.0});
            if (std::abs(t - layout.smile_tenor) < 1e-12)
                for (double off : layout.smile_offsets_bp)
                    quotes.push_back(SwaptionQuote{e, t, false, off, 0.0});
        }
    const auto groups = group_quotes(curve, quotes);
    const auto vols = model_vols(params, curve, groups, quotes.size(), engine);
    for (std::size_t i = 0; i < quotes.size(); ++i) quotes[i].normal_vol = vols[i];
    return VolSurface(std::move(quotes));
}

ModelParams perturbed(const ModelParams& params, double relative, std::uint64_t seed,
                      const Bounds& bounds) {
    std::mt19937_64 gen(seed);
    ParamVector x = to_vector(params);
    for (std::size_t i = 0; i < param_count; ++i) {
        const double sign = (gen() >> 63) ? 1.0 : -1.0;
        x[i] = std::clamp(x[i] * (1.0 + sign * relative), bounds.lower[i], bounds.upper[i]);
    }
    if (!(2.0 * x[kappa] * x[theta] > x[epsilon] * x[epsilon]))
        x[epsilon] = 0.95 * std::sqrt(2.0 * x[kappa] * x[theta]);
    return from_vector(x, params);
}

}  // namespace ddsv::calib
