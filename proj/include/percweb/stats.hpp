#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace percweb {

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = kZ95);

// |p1 - p2| / sqrt(p1 q1 / n1 + p2 q2 / n2); 0 when both estimates are
// degenerate and equal, +inf when degenerate and different.
double two_proportion_z(std::uint64_t s1, std::uint64_t n1, std::uint64_t s2, std::uint64_t n2);

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
};

// Ordinary least squares y ~ intercept + slope * x (needs >= 2 distinct x).
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Linear-interpolated empirical quantile, q in [0, 1]. Sorts a copy.
double quantile(std::vector<double> values, double q);

// 64-bit FNV-1a over raw bytes; used for configuration and result digests.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace percweb
