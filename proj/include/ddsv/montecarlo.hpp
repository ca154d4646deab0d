#pragma once

#include <cstdint>
#include <vector>

#include "ddsv/market.hpp"

namespace ddsv::mc {

struct SimConfig {
    std::size_t paths = 5000;
    int steps_per_year = 12;
    std::uint64_t seed = 1;
    /// Paths come in (Z, -Z) pairs; `paths` must then be even.
    bool antithetic = true;
    /// Worker threads. The sample does not depend on this.
    unsigned workers = 1;

    void validate() const;
};

/// Terminal swap rates R(T_m), in path order.
struct Sample {
    std::vector<double> values;
    bool antithetic = false;
};

/// Log-Euler simulation of the frozen swap-rate / variance dynamics under Q^S.
Sample simulate_swap_rate(const SwapGeometry& geom, const ModelParams& params,
                          const SimConfig& cfg);

/// Pooled correlation of the per-step increments (ΔR, ΔV) over all paths.
double increment_correlation(const SwapGeometry& geom, const ModelParams& params,
                             const SimConfig& cfg);

struct Estimate {
    double price = 0.0;  // discounted mean payer payoff
    double ci_low = 0.0;
    double ci_high = 0.0;
    double std_error = 0.0;
    /// Bachelier standard deviations (not annualized) for the price and the
    /// CI endpoints. 0 where the value sits at or below intrinsic.
    double nu = 0.0;
    double nu_low = 0.0;
    double nu_high = 0.0;
    /// Zero sample variance: the CI has zero width.
    bool degenerate = false;
};

/// Payer price with a normal-approximation CI at `level`. The vol interval
/// inverts the CI of the out-of-the-money side relative to the sample mean.
/// Throws InputError on an empty sample.
Estimate mc_price_and_ci(const Sample& sample, const SwapGeometry& geom, double strike,
                         double level = 0.95);

}  // namespace ddsv::mc
