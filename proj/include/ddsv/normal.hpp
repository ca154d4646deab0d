#pragma once

#include <cmath>
#include <numbers>

namespace ddsv {

inline constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343819;

inline double norm_pdf(double x) { return inv_sqrt_2pi * std::exp(-0.5 * x * x); }

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace ddsv
