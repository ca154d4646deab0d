#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ddsv {

/// Discount factors on a tenor grid T_0 = 0 < T_1 < ... < T_M.
///
/// Forward j covers [T_j, T_{j+1}], so there are M forwards indexed 0..M-1.
/// Discounts above one are accepted (negative-rate regimes).
class YieldCurve {
public:
    YieldCurve(std::vector<double> tenors, std::vector<double> discounts);

    std::size_t points() const noexcept { return tenors_.size(); }
    std::size_t forward_count() const noexcept { return tenors_.size() - 1; }

    double tenor(std::size_t i) const { return tenors_.at(i); }
    double discount(std::size_t i) const { return discounts_.at(i); }
    const std::vector<double>& tenors() const noexcept { return tenors_; }
    const std::vector<double>& discounts() const noexcept { return discounts_; }

    /// Accrual ΔT_j = T_{j+1} - T_j.
    double accrual(std::size_t j) const { return tenors_.at(j + 1) - tenors_.at(j); }

    /// Simply compounded forward F_j(0) = (P(0,T_j)/P(0,T_{j+1}) - 1)/ΔT_j.
    double forward(std::size_t j) const;

    /// Grid index of tenor `t` (tolerance 1e-9 years), or nullopt.
    std::optional<std::size_t> index_of(double t) const;

private:
    std::vector<double> tenors_;
    std::vector<double> discounts_;
};

/// One market quote. Vols are stored in absolute rate units per sqrt(year).
struct SwaptionQuote {
    double expiry = 0.0;
    double tenor = 0.0;
    bool atm = true;
    double strike_offset_bp = 0.0;  // 0 when atm
    double normal_vol = 0.0;
};

class VolSurface {
public:
    VolSurface() = default;
    explicit VolSurface(std::vector<SwaptionQuote> quotes);

    const std::vector<SwaptionQuote>& quotes() const noexcept { return quotes_; }
    std::size_t size() const noexcept { return quotes_.size(); }
    bool empty() const noexcept { return quotes_.empty(); }

private:
    std::vector<SwaptionQuote> quotes_;
};

/// Model parameters. The nine calibrated coordinates come first, in the
/// order used by calibration::ParamIndex.
struct ModelParams {
    double a = 0.10;
    double b = 0.15;
    double c = 0.60;
    double d = 0.15;
    double kappa = 0.60;
    double theta = 1.00;
    double epsilon = 0.50;
    double rho = -0.30;
    double delta = 0.02;
    double v0 = 1.0;
    /// φ_k for k = 1..K, stored at index k-1. Empty means the default ladder.
    std::vector<double> factor_angles;

    /// g(u) = (b u + a) e^{-c u} + d.
    double vol_level(double u) const;

    /// Unit factor loading β_k = (cos φ_k, sin φ_k), k >= 1.
    std::array<double, 2> beta(std::size_t k) const;

    /// Throws InvalidParameters on sign, range or Feller violations.
    void validate() const;
};

/// φ_k = π/2 · (k-1)/(count-1), k = 1..count.
std::vector<double> default_factor_angles(std::size_t count);

/// Parameters with the factor angle ladder sized for `curve` when unset.
ModelParams with_default_angles(ModelParams params, const YieldCurve& curve);

/// Effective coefficients on one backward-time bucket (τ_j, τ_{j+1}].
struct Bucket {
    double length = 0.0;  // τ_{j+1} - τ_j
    double lambda = 0.0;
    double rho = 0.0;
    double xi = 1.0;
};

/// Frozen time-0 quantities of the swap T_m -> T_n.
struct SwapWeights {
    std::size_t m = 0;
    std::size_t n = 0;
    double annuity = 0.0;
    double swap_rate = 0.0;
    std::vector<double> alpha;  // α_j(0), j = m..n-1 stored at j-m
    std::vector<double> dR_dF;  // ∂R/∂F_j at 0
    std::vector<double> w;      // w_j(0) = ∂R/∂F_j · (F_j(0) + δ)
};

struct SwapGeometry {
    std::size_t m = 0;
    std::size_t n = 0;
    double expiry = 0.0;  // T_m
    double annuity = 0.0;
    double swap_rate = 0.0;
    std::vector<double> alpha;
    std::vector<double> w;
    /// Backward-time buckets: index 0 is the calendar interval [T_{m-1}, T_m).
    std::vector<Bucket> buckets;
};

YieldCurve load_curve(std::string_view csv_text, const std::string& source = "curve");
VolSurface load_vols(std::string_view csv_text, const std::string& source = "vols");

/// Annuity, swap rate and frozen weights. Throws ShiftInfeasible.
SwapWeights frozen_weights(const YieldCurve& curve, double delta, std::size_t m, std::size_t n);

/// λ, ρ, ξ on backward bucket j (calendar interval [T_{m-j-1}, T_{m-j})).
Bucket effective_coefficients(const YieldCurve& curve, const ModelParams& params,
                              const SwapWeights& weights, std::size_t j);

SwapGeometry build_swap_geometry(const YieldCurve& curve, const ModelParams& params,
                                 std::size_t m, std::size_t n);

}  // namespace ddsv
