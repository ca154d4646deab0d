#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "ddsv/mgf.hpp"
#include "ddsv/pricing.hpp"

// Independent reference routes: contour-integral pricing, direct ODE
// integration, finite differences and payoff quadrature.
namespace ddsv::oracle {

struct ContourConfig {
    /// Contour shift in standardized units. Positive prices the payer
    /// directly; negative prices the receiver and converts by parity.
    double alpha = 1.0;
    /// Gauss-Legendre order per panel.
    int panel_order = 16;
    /// Unit-width panels before widths start doubling. panel_order * this >= 64.
    int unit_panels = 4;
    double tail_tolerance = 1e-14;
    double max_bound = 1e4;
};

/// E[(X - k)^+] (alpha > 0) or E[(k - X)^+] (alpha < 0) for X = (R(T_m) - R(0))/scale,
/// by integrating along Re w = alpha.
double contour_unit_integral(const SwapGeometry& geom, const ModelParams& params, double scale,
                             double k, const ContourConfig& cfg = {});

SwaptionPrice contour_price(const SwapGeometry& geom, const ModelParams& params, double strike,
                            const ContourConfig& cfg = {});

/// Several strikes on one geometry sharing MGF evaluations at the nodes.
std::vector<SwaptionPrice> contour_prices(const SwapGeometry& geom, const ModelParams& params,
                                          std::span<const double> strikes,
                                          const ContourConfig& cfg = {});

/// Adaptive (step-doubling) RK4 integration of the Riccati system, bucket by bucket.
RiccatiValue<cplx> riccati_rk4(const SwapGeometry& geom, const ModelParams& params, cplx z,
                               double rel_tol = 1e-12);

/// f^(k)(0), k = 0..4, of f = ln ψ from Richardson-extrapolated central
/// differences of solve_order0 (the exactly linear z R(0) term is added analytically).
std::array<double, 5> fd_cumulants(const SwapGeometry& geom, const ModelParams& params);

/// ψ^(k)(0) assembled from fd_cumulants through the moment-cumulant relations.
double mgf_fd_derivatives(const SwapGeometry& geom, const ModelParams& params, int k);

/// ν B^S ∫_{z_K} (z - z_K) g(z) dz by adaptive Gauss-Kronrod.
double quadrature_payoff_price(const std::function<double(double)>& density,
                               const SwapGeometry& geom, const ExpansionMoments& m, double strike);

/// ∫ λ(t)² E[V(t)] dt under the frozen dynamics: the exact variance of R(T_m).
double integrated_variance(const SwapGeometry& geom, const ModelParams& params);

}  // namespace ddsv::oracle
