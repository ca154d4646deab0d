#include "ddsv/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ddsv/calibration.hpp"
#include "ddsv/csv.hpp"
#include "ddsv/error.hpp"
#include "ddsv/expansion.hpp"
#include "ddsv/mgf.hpp"
#include "ddsv/montecarlo.hpp"
#include "ddsv/oracle.hpp"
#include "ddsv/pricing.hpp"

namespace ddsv::cli {

namespace fs = std::filesystem;

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& dir, const std::string& name, const std::string& content) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw InputError("write failed for '" + path.string() + "'");
}

std::string num(double v) { return csv::format(v); }
std::string bp(double v) { return csv::format(v * 1e4); }

std::string offset_cell(const SwaptionQuote& q) { return q.atm ? "ATM" : num(q.strike_offset_bp); }

std::string key_cells(const SwaptionQuote& q) {
    return num(q.expiry) + "," + num(q.tenor) + "," + offset_cell(q);
}

// Implied vol per sqrt(year), NaN when the price admits no Bachelier vol.
double implied_or_nan(const SwapGeometry& geom, double price, double strike) {
    try {
        return annualize(bachelier_implied_vol(geom, price, strike), geom.expiry);
    } catch (const InversionError&) {
        return nan;
    }
}

struct Common {
    std::string curve_path;
    std::string vols_path;
    std::string params_path;
    std::string engine;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    unsigned workers = 1;
};

YieldCurve load_curve_file(const std::string& path) { return load_curve(read_file(path), path); }

VolSurface load_vols_file(const std::string& path) {
    const std::string text = read_file(path);
    if (trim(text).empty()) throw InputError(path + ": no instruments");
    VolSurface s = load_vols(text, path);
    if (s.empty()) throw InputError(path + ": no instruments");
    return s;
}

ModelParams load_params(const Common& c) {
    if (c.params_path.empty()) return ModelParams{};
    return parse_params(read_file(c.params_path), c.params_path);
}

struct Priced {
    SwapGeometry geom;
    std::optional<ExpansionMoments> moments;
    std::string moment_error;
};

Priced prepare(const YieldCurve& curve, const ModelParams& params, const calib::InstrumentGroup& g) {
    Priced p{build_swap_geometry(curve, params, g.m, g.n), std::nullopt, {}};
    try {
        p.moments = standardized_moments(psi_derivatives_at_zero(p.geom, params));
    } catch (const ExpansionInvalid& e) {
        p.moment_error = e.what();
    }
    return p;
}

// ---------------------------------------------------------------- price

int cmd_price(const Common& c, std::ostream& out) {
    const YieldCurve curve = load_curve_file(c.curve_path);
    const VolSurface surface = load_vols_file(c.vols_path);
    const ModelParams params = with_default_angles(load_params(c), curve);
    const std::string engine = c.engine.empty() ? "edgeworth" : c.engine;
    if (engine != "bachelier" && engine != "gram_charlier" && engine != "edgeworth" &&
        engine != "contour")
        throw InputError("price: unknown engine '" + engine + "'");

    const auto groups = calib::group_instruments(curve, surface);
    std::vector<std::string> rows(surface.size());
    for (const auto& g : groups) {
        const Priced p = prepare(curve, params, g);
        if (!p.moments) throw ExpansionInvalid(p.moment_error);
        const ExpansionMoments& m = *p.moments;
        std::vector<double> strikes;
        for (const auto& ins : g.members) strikes.push_back(ins.strike);
        std::vector<SwaptionPrice> prices;
        if (engine == "contour") {
            prices = oracle::contour_prices(p.geom, params, strikes);
        } else {
            for (double k : strikes)
                prices.push_back(engine == "bachelier"   ? bachelier_price(p.geom, m, k)
                                 : engine == "gram_charlier" ? gc_price(p.geom, m, k)
                                                             : ew_price(p.geom, m, k));
        }
        for (std::size_t i = 0; i < g.members.size(); ++i) {
            const auto& q = surface.quotes()[g.members[i].quote];
            const double vol = implied_or_nan(p.geom, prices[i].price, strikes[i]);
            rows[g.members[i].quote] = key_cells(q) + "," + num(strikes[i]) + "," + engine + "," +
                                       num(prices[i].price) + "," + bp(vol) + "," +
                                       num((strikes[i] - m.r0) / m.nu) + "," + num(m.mu3) + "," +
                                       num(m.mu4) + "," + (prices[i].negative ? "1" : "0") + "\n";
        }
    }
    std::string csv = "expiry,tenor,strike_offset_bp,strike,engine,price,normal_vol_bp,z_k,mu3,mu4,negative\n";
    for (const auto& r : rows) csv += r;
    write_file(c.out_dir, "price.csv", csv);
    out << "priced " << surface.size() << " instruments with " << engine << " -> "
        << (fs::path(c.out_dir) / "price.csv").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- smile

int cmd_smile(const Common& c, std::ostream& out) {
    const YieldCurve curve = load_curve_file(c.curve_path);
    const VolSurface surface = load_vols_file(c.vols_path);
    const ModelParams params = with_default_angles(load_params(c), curve);
    const auto groups = calib::group_instruments(curve, surface);

    std::vector<std::string> rows(surface.size());
    for (const auto& g : groups) {
        const Priced p = prepare(curve, params, g);
        if (!p.moments) throw ExpansionInvalid(p.moment_error);
        const ExpansionMoments& m = *p.moments;
        for (const auto& ins : g.members) {
            const auto& q = surface.quotes()[ins.quote];
            const double T = p.geom.expiry;
            rows[ins.quote] = key_cells(q) + "," + num(ins.strike) + "," +
                              num((ins.strike - m.r0) / m.nu) + "," + num(m.mu3) + "," + num(m.mu4) +
                              "," + bp(annualize(m.nu, T)) + "," + bp(annualize(gc_smile(m, ins.strike), T)) +
                              "," + bp(annualize(ew_smile(m, ins.strike), T)) + "," + bp(q.normal_vol) +
                              "\n";
        }
    }
    std::string csv =
        "expiry,tenor,strike_offset_bp,strike,z_k,mu3,mu4,bachelier_vol_bp,gram_charlier_vol_bp,"
        "edgeworth_vol_bp,market_vol_bp\n";
    for (const auto& r : rows) csv += r;
    write_file(c.out_dir, "smile.csv", csv);
    out << "smile for " << surface.size() << " instruments -> "
        << (fs::path(c.out_dir) / "smile.csv").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- calibrate

struct CalibOptions {
    std::size_t budget = 2500;
    std::size_t starts = 4;
    std::string fix;
};

calib::CalibrationSpec make_spec(const Common& c, const CalibOptions& o, const ModelParams& initial,
                                 calib::CalibEngine engine) {
    calib::CalibrationSpec spec;
    spec.engine = engine;
    spec.budget = o.budget;
    spec.starts = o.starts;
    spec.seed = c.seed;
    spec.workers = c.workers;
    spec.initial = initial;
    std::stringstream ss(o.fix);
    std::string name;
    while (std::getline(ss, name, ',')) {
        name = trim(name);
        if (name.empty()) continue;
        const auto it = std::find(calib::param_names.begin(), calib::param_names.end(), name);
        if (it == calib::param_names.end()) throw InputError("--fix: unknown parameter '" + name + "'");
        spec.fixed[static_cast<std::size_t>(it - calib::param_names.begin())] = true;
    }
    return spec;
}

double rmse(const std::vector<double>& residuals) {
    double s = 0.0;
    for (double r : residuals) s += r * r;
    return residuals.empty() ? 0.0 : std::sqrt(s / static_cast<double>(residuals.size()));
}

int cmd_calibrate(const Common& c, const CalibOptions& o, std::ostream& out) {
    const YieldCurve curve = load_curve_file(c.curve_path);
    const VolSurface surface = load_vols_file(c.vols_path);
    const ModelParams initial = load_params(c);
    const auto engine = calib::parse_engine(c.engine.empty() ? "edgeworth_price" : c.engine);
    const auto spec = make_spec(c, o, initial, engine);
    const auto res = calib::calibrate(spec, surface, curve);

    std::string fitted = "expiry,tenor,strike_offset_bp,normal_vol_bp\n";
    std::string resid = "expiry,tenor,strike_offset_bp,market_vol_bp,model_vol_bp,residual_bp\n";
    for (std::size_t i = 0; i < surface.size(); ++i) {
        const auto& q = surface.quotes()[i];
        fitted += key_cells(q) + "," + bp(res.model_vols[i]) + "\n";
        resid += key_cells(q) + "," + bp(q.normal_vol) + "," + bp(res.model_vols[i]) + "," +
                 bp(res.residuals[i]) + "\n";
    }
    const std::string summary =
        "engine,budget,starts,evaluations,initial_objective,objective,rmse_bp,converged\n" +
        std::string(calib::engine_label(engine)) + "," + std::to_string(spec.budget) + "," +
        std::to_string(spec.starts) + "," + std::to_string(res.evaluations) + "," +
        num(res.initial_objective) + "," + num(res.objective) + "," + bp(rmse(res.residuals)) + "," +
        (res.converged ? "1" : "0") + "\n";
    const std::string timing = "engine,seconds\n" + std::string(calib::engine_label(engine)) + "," +
                               num(res.seconds) + "\n";

    write_file(c.out_dir, "calibrated_params.txt", format_params(res.params));
    write_file(c.out_dir, "fitted_vols.csv", fitted);
    write_file(c.out_dir, "calibration_residuals.csv", resid);
    write_file(c.out_dir, "calibration_summary.csv", summary);
    write_file(c.out_dir, "calibration_timing.csv", timing);
    out << "calibrated " << surface.size() << " instruments with " << calib::engine_label(engine)
        << ": objective " << num(res.objective) << ", rmse " << bp(rmse(res.residuals)) << " bp, "
        << res.evaluations << " evaluations, " << res.seconds << " s\n";
    return 0;
}

// ---------------------------------------------------------------- validate

struct ValidateOptions {
    std::size_t paths = 5000;
    int steps = 12;
};

int cmd_validate(const Common& c, const ValidateOptions& o, std::ostream& out) {
    const YieldCurve curve = load_curve_file(c.curve_path);
    const VolSurface surface = load_vols_file(c.vols_path);
    const ModelParams params = with_default_angles(load_params(c), curve);
    const auto groups = calib::group_instruments(curve, surface);

    std::vector<std::string> rows(surface.size());
    std::size_t inside = 0, total = 0;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        const Priced p = prepare(curve, params, g);
        const double T = p.geom.expiry;
        std::vector<double> strikes;
        for (const auto& ins : g.members) strikes.push_back(ins.strike);
        const auto contour = oracle::contour_prices(p.geom, params, strikes);

        mc::SimConfig sim;
        sim.paths = o.paths;
        sim.steps_per_year = o.steps;
        sim.seed = c.seed + 0x9e3779b97f4a7c15ULL * (gi + 1);
        sim.workers = c.workers;
        const mc::Sample sample = mc::simulate_swap_rate(p.geom, params, sim);

        for (std::size_t i = 0; i < g.members.size(); ++i) {
            const auto& ins = g.members[i];
            const auto& q = surface.quotes()[ins.quote];
            double ew = nan, gc = nan;
            if (p.moments) {
                ew = implied_or_nan(p.geom, ew_price(p.geom, *p.moments, ins.strike).price, ins.strike);
                gc = implied_or_nan(p.geom, gc_price(p.geom, *p.moments, ins.strike).price, ins.strike);
            }
            const double cv = implied_or_nan(p.geom, contour[i].price, ins.strike);
            const auto est = mc::mc_price_and_ci(sample, p.geom, ins.strike);
            const double lo = annualize(est.nu_low, T), hi = annualize(est.nu_high, T);
            auto flag = [&](double v) { return (v >= lo && v <= hi) ? "1" : "0"; };
            if (std::isfinite(ew)) {
                ++total;
                if (ew >= lo && ew <= hi) ++inside;
            }
            rows[ins.quote] = key_cells(q) + "," + num(ins.strike) + "," + bp(ew) + "," + bp(gc) + "," +
                              bp(cv) + "," + bp(annualize(est.nu, T)) + "," + bp(lo) + "," + bp(hi) +
                              "," + num(est.price) + "," + num(est.std_error) + "," + flag(ew) + "," +
                              flag(gc) + "," + flag(cv) + "\n";
        }
    }
    std::string csv =
        "expiry,tenor,strike_offset_bp,strike,edgeworth_vol_bp,gram_charlier_vol_bp,contour_vol_bp,"
        "mc_vol_bp,ci_low_bp,ci_high_bp,mc_price,mc_std_error,edgeworth_inside,gram_charlier_inside,"
        "contour_inside\n";
    for (const auto& r : rows) csv += r;
    write_file(c.out_dir, "validate.csv", csv);
    out << "validated " << surface.size() << " instruments with " << o.paths
        << " paths: edgeworth inside the 95% CI for " << inside << " of " << total << "\n";
    return 0;
}

// ---------------------------------------------------------------- bench

int cmd_bench(const Common& c, const CalibOptions& o, std::ostream& out) {
    const YieldCurve curve = load_curve_file(c.curve_path);
    const ModelParams params = load_params(c);
    const auto fast = calib::parse_engine(c.engine.empty() ? "edgeworth_price" : c.engine);
    if (fast == calib::CalibEngine::contour) throw InputError("bench: --engine must be an expansion engine");

    VolSurface surface;
    ModelParams initial = params;
    if (c.vols_path.empty()) {
        surface = calib::synthetic_surface(curve, params, fast);
        initial = calib::perturbed(params, 0.2, c.seed);
        std::string csv = "expiry,tenor,strike_offset_bp,normal_vol_bp\n";
        for (const auto& q : surface.quotes()) csv += key_cells(q) + "," + bp(q.normal_vol) + "\n";
        write_file(c.out_dir, "synthetic_vols.csv", csv);
    } else {
        surface = load_vols_file(c.vols_path);
    }

    const auto slow_res = calib::calibrate(make_spec(c, o, initial, calib::CalibEngine::contour), surface, curve);
    const auto fast_res = calib::calibrate(make_spec(c, o, initial, fast), surface, curve);

    std::string bench = "engine,budget,evaluations,objective,rmse_bp\n";
    for (const auto& [label, r] : {std::pair{calib::engine_label(calib::CalibEngine::contour), &slow_res},
                                   std::pair{calib::engine_label(fast), &fast_res}})
        bench += std::string(label) + "," + std::to_string(o.budget) + "," + std::to_string(r->evaluations) +
                 "," + num(r->objective) + "," + bp(rmse(r->residuals)) + "\n";
    const double speedup = slow_res.seconds / fast_res.seconds;
    const std::string timing = "contour_seconds,expansion_seconds,speedup\n" + num(slow_res.seconds) + "," +
                               num(fast_res.seconds) + "," + num(speedup) + "\n";
    write_file(c.out_dir, "bench.csv", bench);
    write_file(c.out_dir, "bench_timing.csv", timing);
    out << "bench on " << surface.size() << " instruments, budget " << o.budget << ": contour "
        << slow_res.seconds << " s, " << calib::engine_label(fast) << " " << fast_res.seconds
        << " s, speedup " << speedup << "x\n";
    return 0;
}

}  // namespace

// ---------------------------------------------------------------- params files

ModelParams parse_params(std::string_view text, const std::string& source) {
    ModelParams p;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string line(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(source, line_no, "expected key=value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key == "factor_angles") {
            p.factor_angles.clear();
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ','))
                p.factor_angles.push_back(csv::to_double(trim(item), source, line_no, key));
            continue;
        }
        const double v = csv::to_double(value, source, line_no, key);
        if (key == "v0") {
            p.v0 = v;
            continue;
        }
        const auto it = std::find(calib::param_names.begin(), calib::param_names.end(), key);
        if (it == calib::param_names.end()) throw ParseError(source, line_no, "unknown key '" + key + "'");
        auto x = calib::to_vector(p);
        x[static_cast<std::size_t>(it - calib::param_names.begin())] = v;
        p = calib::from_vector(x, p);
    }
    try {
        p.validate();
    } catch (const InvalidParameters& e) {
        throw ParseError(source, 0, e.what());
    }
    return p;
}

std::string format_params(const ModelParams& p) {
    std::string s;
    const auto x = calib::to_vector(p);
    for (std::size_t i = 0; i < calib::param_count; ++i)
        s += std::string(calib::param_names[i]) + "=" + csv::format(x[i]) + "\n";
    s += "v0=" + csv::format(p.v0) + "\n";
    if (!p.factor_angles.empty()) {
        s += "factor_angles=";
        for (std::size_t i = 0; i < p.factor_angles.size(); ++i)
            s += (i ? "," : "") + csv::format(p.factor_angles[i]);
        s += "\n";
    }
    return s;
}

// ---------------------------------------------------------------- entry

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Swaption pricing and calibration under a displaced-diffusion SV-LMM"};
    app.name("ddsv");
    app.require_subcommand(1);

    Common c;
    CalibOptions calib_opts;
    ValidateOptions val_opts;

    auto add_common = [&](CLI::App* sub, bool needs_vols) {
        sub->add_option("--curve", c.curve_path, "discount curve CSV (tenor,discount)")->required();
        auto* vols = sub->add_option("--vols", c.vols_path,
                                     "vol surface CSV (expiry,tenor,strike_offset_bp,normal_vol_bp)");
        if (needs_vols) vols->required();
        sub->add_option("--params", c.params_path, "model parameters, key=value lines");
        sub->add_option("--engine", c.engine, "pricing engine");
        sub->add_option("--seed", c.seed, "random seed");
        sub->add_option("--out", c.out_dir, "output directory");
        sub->add_option("--workers", c.workers, "worker threads")->check(CLI::Range(1u, 256u));
    };

    auto* price = app.add_subcommand("price", "price every quoted instrument");
    add_common(price, true);
    auto* smile = app.add_subcommand("smile", "closed-form smile approximations");
    add_common(smile, true);
    auto* calibrate = app.add_subcommand("calibrate", "fit model parameters to a vol surface");
    add_common(calibrate, true);
    calibrate->add_option("--budget", calib_opts.budget, "objective evaluation budget")->check(CLI::PositiveNumber);
    calibrate->add_option("--starts", calib_opts.starts, "multi-start count")->check(CLI::PositiveNumber);
    calibrate->add_option("--fix", calib_opts.fix, "comma-separated parameters held fixed");
    auto* validate = app.add_subcommand("validate", "compare engines against Monte Carlo");
    add_common(validate, true);
    validate->add_option("--paths", val_opts.paths, "Monte Carlo paths")->check(CLI::Range(2, 100000000));
    validate->add_option("--steps", val_opts.steps, "time steps per year")->check(CLI::Range(4, 100000));
    auto* bench = app.add_subcommand("bench", "calibration timing, contour vs expansion");
    add_common(bench, false);
    bench->add_option("--budget", calib_opts.budget, "objective evaluation budget")->check(CLI::PositiveNumber);
    bench->add_option("--starts", calib_opts.starts, "multi-start count")->check(CLI::PositiveNumber);
    bench->add_option("--fix", calib_opts.fix, "comma-separated parameters held fixed");

    std::vector<std::string> storage{"ddsv"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*price) return cmd_price(c, out);
        if (*smile) return cmd_smile(c, out);
        if (*calibrate) return cmd_calibrate(c, calib_opts, out);
        if (*validate) return cmd_validate(c, val_opts, out);
        if (*bench) return cmd_bench(c, calib_opts, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "numerical error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace ddsv::cli
