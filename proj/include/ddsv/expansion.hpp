#pragma once

#include "ddsv/mgf.hpp"

namespace ddsv {

/// H_n with H_n(z) φ(z) = φ^{(n)}(z), so H_1 = -z and H_3 = -z³ + 3z.
/// Valid for 0 <= n <= 6; throws std::out_of_range otherwise.
double hermite(int n, double z);

/// Standardized moments of Z = (R(T_m) - R(0)) / ν.
struct ExpansionMoments {
    double nu = 0.0;   // standard deviation of R(T_m), absolute rate units
    double mu3 = 0.0;  // E[Z³]
    double mu4 = 3.0;  // E[Z⁴]
    double r0 = 0.0;   // R_{m,n}(0)
};

/// k-th standardized moment via the binomial expansion of ψ^(j)(0).
double standardized_moment(const MgfSolution& sol, int k);

/// Throws ExpansionInvalid if mu4 < 1 + mu3².
ExpansionMoments standardized_moments(const MgfSolution& sol);

/// Fourth-order Gram-Charlier density g₁.
double gc_density(const ExpansionMoments& m, double z);

/// Edgeworth density g₂ = g₁ + φ μ₃²/72 H₆.
double ew_density(const ExpansionMoments& m, double z);

enum class Expansion { gram_charlier, edgeworth };

/// False when the (unclipped) density dips below zero on a [-6, 6] scan, step 0.01.
bool density_is_positive(const ExpansionMoments& m, Expansion kind);

}  // namespace ddsv
