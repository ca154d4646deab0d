#include "ddsv/mgf.hpp"

#include <cmath>
#include <string>

#include "ddsv/error.hpp"

namespace ddsv {

namespace {

// (1 - e^{-x}) / x with a series near the origin.
cplx one_minus_exp_over(cplx x) {
    if (std::abs(x) < 1e-3)
        return 1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0 + x * x * x * x / 120.0;
    return (1.0 - std::exp(-x)) / x;
}

// log(1 + x) / x with a series near the origin.
cplx log1p_over(cplx x) {
    if (std::abs(x) < 1e-3) {
        const cplx x2 = x * x;
        return 1.0 - x / 2.0 + x2 / 3.0 - x2 * x / 4.0 + x2 * x2 / 5.0 - x2 * x2 * x / 6.0;
    }
    return std::log(1.0 + x) / x;
}

// One bucket of the order-0 recursion, written with e^{-du} instead of
// e^{du}. With h3 = a - d - ε²B_j and h1 = h3 + 2d:
//   ln(-h4/(2d)) = d u + log1p(h3 (1 - e^{-du}) / (2d))
//   h5/h4        = h1 h3 (1 - e^{-du}) / (2d + h3 (1 - e^{-du}))
// and a - d = λ²ε²z²/(a + d), so every 1/ε² cancels analytically.
RiccatiValue<cplx> order0_increment(const Bucket& bk, const ModelParams& p, cplx z, cplx B_j,
                                    std::size_t index) {
    const double eps = p.epsilon;
    const double u = bk.length;
    const cplx lz = bk.lambda * z;
    const cplx a = p.kappa * bk.xi - bk.rho * eps * lz;
    const cplx d = std::sqrt(a * a - eps * eps * lz * lz);  // principal branch, Re d >= 0
    const cplx apd = a + d;

    const cplx lz2_over_apd = lz == 0.0 ? cplx{} : lz * lz / apd;  // (a - d)/ε²
    const cplx q = lz2_over_apd - B_j;                              // h3/ε²
    const cplx h3 = eps * eps * q;
    const cplx h1 = h3 + 2.0 * d;
    const cplx e_over_d = one_minus_exp_over(d * u) * u;  // (1 - e^{-du})/d
    const cplx x = 0.5 * h3 * e_over_d;                  // h3 (1 - e^{-du})/(2d)

    const cplx one_plus_x = 1.0 + x;
    if (std::abs(one_plus_x) < 1e-13 * (1.0 + std::abs(x)))
        throw SingularEvaluation(index, "h4 vanishes (log argument at zero)");

    RiccatiValue<cplx> inc;
    inc.B = 0.5 * h1 * q * e_over_d / one_plus_x;
    inc.A = p.kappa * p.theta * (lz2_over_apd * u - q * e_over_d * log1p_over(x));
    if (!std::isfinite(inc.A.real()) || !std::isfinite(inc.A.imag()) ||
        !std::isfinite(inc.B.real()) || !std::isfinite(inc.B.imag()))
        throw SingularEvaluation(index, "non-finite Riccati increment");
    return inc;
}

using Orders = std::array<double, max_order + 1>;

struct Increment {
    Orders A{};
    Orders B{};
};

// Orders 1..4 of the bucket increments Ã_j^{(k)}, B̃_j^{(k)} at z = 0, with
// the h-terms kept as displayed in the closed-form derivative recursions.
Increment derivative_increment(const Bucket& bk, const ModelParams& p, const Orders& Bj,
                               std::size_t index) {
    const double kappa = p.kappa;
    const double eps = p.epsilon;
    const double eps2 = eps * eps;
    const double lam = bk.lambda;
    const double u = bk.length;

    // a^{(k)}, d^{(k)} at z = 0
    const double a0 = kappa * bk.xi;
    const double a1 = -bk.rho * eps * lam;
    const double d0 = a0;
    if (std::abs(d0) < 1e-300) throw SingularEvaluation(index, "d(0) = kappa xi vanishes");
    const double d1 = a0 * a1 / d0;
    const double d2 = (a1 * a1 - lam * lam * eps2 - d1 * d1) / d0;
    const double d3 = -3.0 * d2 * d1 / d0;
    const double d4 = -3.0 * d3 * d1 / d0 - 3.0 * d2 * d2 / d0 + 3.0 * d2 * d1 * d1 / (d0 * d0);

    const double ex = std::exp(d0 * u);

    // h_1 .. h_5 and their z-derivatives
    const double h1_0 = a0 + d0 - eps2 * Bj[0];
    const double h2_0 = 1.0 - ex;
    const double h3_0 = a0 - d0 - eps2 * Bj[0];
    const double h4_0 = h3_0 + h1_0 * (h2_0 - 1.0);
    const double h5_0 = h1_0 * h2_0 * h3_0;
    if (std::abs(h4_0) < 1e-300) throw SingularEvaluation(index, "h4 vanishes");

    const double h1_1 = a1 + d1 - eps2 * Bj[1];
    const double h2_1 = -d1 * u * ex;
    const double h3_1 = a1 - d1 - eps2 * Bj[1];
    const double h4_1 = h3_1 + h1_1 * (h2_0 - 1.0) + h1_0 * h2_1;
    const double h5_1 = h1_1 * h2_0 * h3_0 + h1_0 * h2_1 * h3_0 + h1_0 * h2_0 * h3_1;

    // a^{(2)} = 0
    const double h1_2 = d2 - eps2 * Bj[2];
    const double h2_2 = -d2 * u * ex + d1 * u * h2_1;
    const double h3_2 = -d2 - eps2 * Bj[2];
    const double h4_2 = h3_2 + h1_2 * (h2_0 - 1.0) + h1_0 * h2_2 + 2.0 * h1_1 * h2_1;
    const double h5_2 = h1_2 * h2_0 * h3_0 + h1_0 * h2_2 * h3_0 + h1_0 * h2_0 * h3_2 +
                        2.0 * (h1_1 * h2_1 * h3_0 + h1_1 * h2_0 * h3_1 + h1_0 * h2_1 * h3_1);

    const double h1_3 = d3 - eps2 * Bj[3];
    const double h2_3 = -d3 * u * ex + 2.0 * d2 * u * h2_1 + d1 * u * h2_2;
    const double h3_3 = -d3 - eps2 * Bj[3];
    const double h4_3 =
        h3_3 + h1_3 * (h2_0 - 1.0) + h1_0 * h2_3 + 3.0 * h1_2 * h2_1 + 3.0 * h1_1 * h2_2;
    const double h5_3 = h1_3 * h2_0 * h3_0 + h1_0 * h2_3 * h3_0 + h1_0 * h2_0 * h3_3 +
                        3.0 * (h1_2 * h2_1 * h3_0 + h1_2 * h2_0 * h3_1 + h1_1 * h2_2 * h3_0 +
                               h1_0 * h2_2 * h3_1 + h1_1 * h2_0 * h3_2 + h1_0 * h2_1 * h3_2) +
                        6.0 * h1_1 * h2_1 * h3_1;

    const double h1_4 = d4 - eps2 * Bj[4];
    const double h2_4 =
        -d4 * u * ex + d1 * u * h2_3 + 3.0 * d3 * u * h2_1 + 3.0 * d2 * u * h2_2;
    const double h3_4 = -d4 - eps2 * Bj[4];
    const double h4_4 = h3_4 + h1_4 * (h2_0 - 1.0) + h1_0 * h2_4 + 4.0 * h1_3 * h2_1 +
                        4.0 * h1_1 * h2_3 + 6.0 * h1_2 * h2_2;
    const double h5_4 =
        h1_4 * h2_0 * h3_0 + h1_0 * h2_4 * h3_0 + h1_0 * h2_0 * h3_4 +
        4.0 * (h1_3 * h2_1 * h3_0 + h1_3 * h2_0 * h3_1 + h1_1 * h2_3 * h3_0 + h1_0 * h2_3 * h3_1 +
               h1_1 * h2_0 * h3_3 + h1_0 * h2_1 * h3_3) +
        6.0 * (h1_2 * h2_2 * h3_0 + h1_2 * h2_0 * h3_2 + h1_0 * h2_2 * h3_2) +
        12.0 * (h1_2 * h2_1 * h3_1 + h1_1 * h2_2 * h3_1 + h1_1 * h2_1 * h3_2);

    const double r1 = h4_1 / h4_0, r2 = h4_2 / h4_0, r3 = h4_3 / h4_0, r4 = h4_4 / h4_0;
    const double s1 = d1 / d0, s2 = d2 / d0, s3 = d3 / d0, s4 = d4 / d0;
    const double H = h4_0;
    const double H2 = H * H, H3 = H2 * H, H4 = H3 * H, H5 = H4 * H;
    const double kt = kappa * p.theta / eps2;

    Increment inc;
    inc.A[1] = kt * ((a1 + d1) * u - 2.0 * (r1 - s1));
    inc.B[1] = (h5_1 / H - h5_0 * h4_1 / H2) / eps2;

    inc.A[2] = kt * (d2 * u - 2.0 * (r2 - s2 - r1 * r1 + s1 * s1));
    inc.B[2] = (h5_2 / H - h5_0 * h4_2 / H2 - 2.0 * h5_1 * h4_1 / H2 +
                2.0 * h5_0 * h4_1 * h4_1 / H3) /
               eps2;

    inc.A[3] = kt * (d3 * u - 2.0 * (r3 - s3 - 3.0 * r2 * r1 + 3.0 * s2 * s1 + 2.0 * r1 * r1 * r1 -
                                     2.0 * s1 * s1 * s1));
    inc.B[3] = (h5_3 / H - h5_0 * h4_3 / H2 - 3.0 * h5_2 * h4_1 / H2 - 3.0 * h5_1 * h4_2 / H2 +
                6.0 * h5_0 * h4_2 * h4_1 / H3 + 6.0 * h5_1 * h4_1 * h4_1 / H3 -
                6.0 * h5_0 * h4_1 * h4_1 * h4_1 / H4) /
               eps2;

    inc.A[4] = kt * (d4 * u - 2.0 * (r4 - s4 - 4.0 * r3 * r1 + 4.0 * s3 * s1 - 3.0 * r2 * r2 +
                                     3.0 * s2 * s2 + 12.0 * r2 * r1 * r1 - 12.0 * s2 * s1 * s1 -
                                     6.0 * r1 * r1 * r1 * r1 + 6.0 * s1 * s1 * s1 * s1));
    inc.B[4] = (h5_4 / H - h5_0 * h4_4 / H2 - 4.0 * h5_3 * h4_1 / H2 - 4.0 * h5_1 * h4_3 / H2 -
                6.0 * h5_2 * h4_2 / H2 + 8.0 * h5_0 * h4_3 * h4_1 / H3 +
                12.0 * h5_2 * h4_1 * h4_1 / H3 + 24.0 * h5_1 * h4_2 * h4_1 / H3 +
                6.0 * h5_0 * h4_2 * h4_2 / H3 - 36.0 * h5_0 * h4_2 * h4_1 * h4_1 / H4 -
                24.0 * h5_1 * h4_1 * h4_1 * h4_1 / H4 +
                24.0 * h5_0 * h4_1 * h4_1 * h4_1 * h4_1 / H5) /
               eps2;

    for (std::size_t k = 1; k <= max_order; ++k)
        if (!std::isfinite(inc.A[k]) || !std::isfinite(inc.B[k]))
            throw SingularEvaluation(index, "non-finite derivative of order " + std::to_string(k));
    return inc;
}

}  // namespace

RiccatiValue<cplx> solve_order0(const SwapGeometry& geom, const ModelParams& params, cplx z) {
    RiccatiValue<cplx> acc;
    for (std::size_t j = 0; j < geom.buckets.size(); ++j) {
        const auto inc = order0_increment(geom.buckets[j], params, z, acc.B, j);
        acc.A += inc.A;
        acc.B += inc.B;
    }
    return acc;
}

RiccatiValue<double> solve_order0(const SwapGeometry& geom, const ModelParams& params, double z) {
    const auto v = solve_order0(geom, params, cplx{z, 0.0});
    return {v.A.real(), v.B.real()};
}

BucketCoeffs solve_derivatives(const SwapGeometry& geom, const ModelParams& params) {
    BucketCoeffs out;
    out.A.reserve(geom.buckets.size() + 1);
    out.B.reserve(geom.buckets.size() + 1);
    out.A.push_back(Orders{});
    out.B.push_back(Orders{});
    for (std::size_t j = 0; j < geom.buckets.size(); ++j) {
        const Orders Aj = out.A.back();
        const Orders Bj = out.B.back();
        const auto inc = derivative_increment(geom.buckets[j], params, Bj, j);
        Orders An = Aj, Bn = Bj;
        // order 0 at z = 0 stays identically zero: the source term ½λ²z² vanishes
        for (std::size_t k = 1; k <= max_order; ++k) {
            An[k] += inc.A[k];
            Bn[k] += inc.B[k];
        }
        out.A.push_back(An);
        out.B.push_back(Bn);
    }
    return out;
}

MgfSolution psi_derivatives_at_zero(const SwapGeometry& geom, const ModelParams& params) {
    const BucketCoeffs coeffs = solve_derivatives(geom, params);
    MgfSolution sol;
    sol.A = coeffs.terminal_A();
    sol.B = coeffs.terminal_B();
    sol.swap_rate = geom.swap_rate;
    sol.v0 = params.v0;

    const double V = params.v0;
    const double R = geom.swap_rate;
    auto c = [&](std::size_t k) { return sol.A[k] + sol.B[k] * V; };

    auto& psi = sol.psi;
    psi[0] = std::exp(c(0));
    psi[1] = (c(1) + R) * psi[0];
    psi[2] = c(2) * psi[0] + psi[1] * psi[1] / psi[0];
    psi[3] = c(3) * psi[0] + c(2) * psi[1] + 2.0 * psi[2] * psi[1] / psi[0] -
             psi[1] * psi[1] * psi[1] / (psi[0] * psi[0]);
    psi[4] = c(4) * psi[0] + 2.0 * c(3) * psi[1] + c(2) * psi[2] +
             2.0 * psi[3] * psi[1] / psi[0] + 2.0 * psi[2] * psi[2] / psi[0] -
             5.0 * psi[2] * psi[1] * psi[1] / (psi[0] * psi[0]) +
             2.0 * psi[1] * psi[1] * psi[1] * psi[1] / (psi[0] * psi[0] * psi[0]);

    // ψ2 - ψ1² = c(2)ψ0² exactly at z = 0; test the cumulant rather than the
    // cancelling difference.
    if (!(c(2) > 0.0) || !std::isfinite(c(2)))
        throw InvalidParameters("non-positive swap-rate variance from the MGF");
    return sol;
}

}  // namespace ddsv
