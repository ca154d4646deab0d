#include "ddsv/expansion.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ddsv/error.hpp"
#include "ddsv/normal.hpp"

namespace ddsv {

namespace {

constexpr int max_hermite = 6;

// Coefficients of H_0..H_6 in ascending powers, built once from
// H_{n+1}(z) = H_n'(z) - z H_n(z).
using Poly = std::array<double, max_hermite + 1>;

constexpr std::array<Poly, max_hermite + 1> hermite_table() {
    std::array<Poly, max_hermite + 1> h{};
    h[0][0] = 1.0;
    for (int n = 0; n < max_hermite; ++n)
        for (int p = 0; p <= max_hermite; ++p) {
            double deriv = p + 1 <= max_hermite ? (p + 1) * h[n][p + 1] : 0.0;
            double shift = p >= 1 ? h[n][p - 1] : 0.0;
            h[n + 1][p] = deriv - shift;
        }
    return h;
}

constexpr auto table = hermite_table();

double binomial(int k, int j) {
    double r = 1.0;
    for (int i = 1; i <= j; ++i) r = r * (k - j + i) / i;
    return r;
}

}  // namespace

double hermite(int n, double z) {
    if (n < 0 || n > max_hermite)
        throw std::out_of_range("hermite: order " + std::to_string(n) + " outside [0, 6]");
    double v = 0.0;
    for (int p = n; p >= 0; --p) v = v * z + table[n][p];
    return v;
}

double standardized_moment(const MgfSolution& sol, int k) {
    const double nu = std::sqrt(sol.variance());
    double sum = 0.0;
    for (int j = 0; j <= k; ++j)
        sum += binomial(k, j) * sol.psi[j] * std::pow(-sol.swap_rate, k - j);
    return sum / std::pow(nu, k);
}

ExpansionMoments standardized_moments(const MgfSolution& sol) {
    const double var = sol.variance();
    if (!(var > 0.0)) throw ExpansionInvalid("non-positive variance");
    ExpansionMoments m;
    m.nu = std::sqrt(var);
    m.r0 = sol.swap_rate;
    m.mu3 = standardized_moment(sol, 3);
    m.mu4 = standardized_moment(sol, 4);
    if (!std::isfinite(m.mu3) || !std::isfinite(m.mu4) || m.mu4 < 1.0 + m.mu3 * m.mu3)
        throw ExpansionInvalid("moment inequality mu4 >= 1 + mu3^2 violated (mu3=" +
                               std::to_string(m.mu3) + ", mu4=" + std::to_string(m.mu4) + ")");
    return m;
}

double gc_density(const ExpansionMoments& m, double z) {
    return norm_pdf(z) *
           (1.0 - m.mu3 / 6.0 * hermite(3, z) + (m.mu4 - 3.0) / 24.0 * hermite(4, z));
}

double ew_density(const ExpansionMoments& m, double z) {
    return gc_density(m, z) + norm_pdf(z) * m.mu3 * m.mu3 / 72.0 * hermite(6, z);
}

bool density_is_positive(const ExpansionMoments& m, Expansion kind) {
    for (int i = -600; i <= 600; ++i) {
        const double z = i * 0.01;
        const double g = kind == Expansion::gram_charlier ? gc_density(m, z) : ew_density(m, z);
        if (g < 0.0) return false;
    }
    return true;
}

}  // namespace ddsv
