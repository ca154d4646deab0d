#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

#include "ddsv/market.hpp"

namespace ddsv {

using cplx = std::complex<double>;

/// A(τ_m, z) and B(τ_m, z) of ψ = exp(A + B V + z R).
template <class T>
struct RiccatiValue {
    T A{};
    T B{};
};

/// Closed-form piecewise Riccati solution at terminal τ_m, accumulated over
/// buckets j = 0..m-1. Throws SingularEvaluation carrying the bucket index
/// when the log term of the A-increment degenerates.
RiccatiValue<double> solve_order0(const SwapGeometry& geom, const ModelParams& params, double z);
RiccatiValue<cplx> solve_order0(const SwapGeometry& geom, const ModelParams& params, cplx z);

inline constexpr std::size_t max_order = 4;

/// z-derivatives of A and B at z = 0, orders 0..4, at every bucket boundary
/// τ_0 = 0, τ_1, ..., τ_m (index m is the terminal value).
struct BucketCoeffs {
    std::vector<std::array<double, max_order + 1>> A;
    std::vector<std::array<double, max_order + 1>> B;

    const std::array<double, max_order + 1>& terminal_A() const { return A.back(); }
    const std::array<double, max_order + 1>& terminal_B() const { return B.back(); }
};

BucketCoeffs solve_derivatives(const SwapGeometry& geom, const ModelParams& params);

struct MgfSolution {
    std::array<double, max_order + 1> psi{};  // ψ^(k)(0)
    std::array<double, max_order + 1> A{};    // A_m^(k)
    std::array<double, max_order + 1> B{};    // B_m^(k)
    double swap_rate = 0.0;
    double v0 = 0.0;

    double variance() const { return psi[2] - psi[1] * psi[1]; }
};

/// ψ^(k)(0) for k = 0..4. Throws InvalidParameters on non-positive variance.
MgfSolution psi_derivatives_at_zero(const SwapGeometry& geom, const ModelParams& params);

}  // namespace ddsv
