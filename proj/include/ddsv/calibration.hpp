#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ddsv/market.hpp"
#include "ddsv/oracle.hpp"

namespace ddsv::calib {

enum class CalibEngine {
    edgeworth_price,
    edgeworth_smile,
    gram_charlier_price,
    gram_charlier_smile,
    contour
};

std::string_view engine_label(CalibEngine e);
/// Throws InputError on an unknown name.
CalibEngine parse_engine(std::string_view name);

inline constexpr std::size_t param_count = 9;

enum ParamIndex : std::size_t { a, b, c, d, kappa, theta, epsilon, rho, delta };

inline constexpr std::array<std::string_view, param_count> param_names = {
    "a", "b", "c", "d", "kappa", "theta", "epsilon", "rho", "delta"};

using ParamVector = std::array<double, param_count>;

ParamVector to_vector(const ModelParams& p);
/// Overwrites the nine calibrated coordinates of `base`.
ModelParams from_vector(const ParamVector& x, ModelParams base);

struct Bounds {
    ParamVector lower{0.0, 0.0, 0.01, 0.0, 0.01, 0.05, 0.01, -0.999, 0.0};
    ParamVector upper{1.0, 2.0, 3.0, 1.0, 5.0, 5.0, 2.0, 0.999, 0.10};
};

/// Inadmissible points score penalty_scale * (1 + violation).
inline constexpr double penalty_scale = 1e6;

struct CalibrationSpec {
    CalibEngine engine = CalibEngine::edgeworth_price;
    std::size_t budget = 2500;
    Bounds bounds;
    ModelParams initial;
    std::array<bool, param_count> fixed{};
    std::size_t starts = 4;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    /// Per-instrument weights in surface order; empty means all ones.
    std::vector<double> weights;
    oracle::ContourConfig contour;
};

/// One quote mapped onto the curve grid.
struct Instrument {
    std::size_t quote = 0;  // index into the surface
    std::size_t m = 0;
    std::size_t n = 0;
    double strike = 0.0;
    double market_vol = 0.0;
};

/// Instruments sharing a swap (m, n), priced off one geometry.
struct InstrumentGroup {
    std::size_t m = 0;
    std::size_t n = 0;
    std::vector<Instrument> members;
};

/// Groups in order of first appearance. Throws InputError for quotes off the grid.
std::vector<InstrumentGroup> group_instruments(const YieldCurve& curve, const VolSurface& surface);

/// Model normal vols (annualized, absolute units) in surface order.
/// Throws on inadmissible parameters or numerical failure.
std::vector<double> model_vols(const ModelParams& params, const YieldCurve& curve,
                               const std::vector<InstrumentGroup>& groups, std::size_t count,
                               CalibEngine engine, const oracle::ContourConfig& contour = {},
                               unsigned workers = 1);

/// Constraint violation of `x`: zero inside the box with Feller satisfied.
double violation(const ParamVector& x, const Bounds& bounds);

struct ObjectiveValue {
    double value = 0.0;
    bool penalized = false;
    std::vector<double> residuals;  // √w_i (model_i - market_i); empty when penalized
    std::vector<double> model_vols;
};

/// Σ w_i (model_i - market_i)². Never throws for numerical or admissibility
/// failures; those return the penalty.
ObjectiveValue objective(const ModelParams& params, const YieldCurve& curve,
                         const VolSurface& surface, CalibEngine engine,
                         const CalibrationSpec& spec = {});

struct CalibrationResult {
    ModelParams params;
    double objective = 0.0;
    double initial_objective = 0.0;
    std::vector<double> residuals;
    std::vector<double> model_vols;
    std::size_t evaluations = 0;
    double seconds = 0.0;  // wall clock of the optimizer loop
    bool converged = false;
};

/// Box-projected Nelder-Mead with multi-start. Throws CalibrationFailed when
/// no admissible point was found, InputError on an empty surface.
CalibrationResult calibrate(const CalibrationSpec& spec, const VolSurface& surface,
                            const YieldCurve& curve);

/// Quote grid for synthetic surfaces.
struct SurfaceLayout {
    std::vector<double> expiries{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 15, 20, 25, 30};
    std::vector<double> tenors{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 15, 20, 25, 30};
    /// Off-ATM strikes (bp) quoted for every expiry on `smile_tenor`.
    std::vector<double> smile_offsets_bp{-200, -150, -100, -50, -25, 25, 50, 100, 150, 200};
    double smile_tenor = 10;
};

/// Surface of model vols for `params` under `engine` on `layout`.
VolSurface synthetic_surface(const YieldCurve& curve, const ModelParams& params,
                             CalibEngine engine, const SurfaceLayout& layout = {});

/// `params` with every free coordinate scaled by 1 ± `relative` (seeded sign
/// choice), then projected into the bounds with Feller restored.
ModelParams perturbed(const ModelParams& params, double relative, std::uint64_t seed,
                      const Bounds& bounds = {});

}  // namespace ddsv::calib
