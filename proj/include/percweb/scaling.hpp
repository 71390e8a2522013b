#pragma once

// Crossing-probability estimation, the conformal rectangle-crossing formula,
// the near-critical family p = p_c + t * delta^(1/nu), the (R1, R2) map with
// its fixed point, scaling collapse and the two-region independence test.

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "percweb/clusters.hpp"
#include "percweb/core.hpp"
#include "percweb/parallel.hpp"

namespace percweb {

// Sample i of an estimate uses derive_seed(master_seed, stream_index + i).
// Distinct estimates in one run take disjoint stream blocks of this size.
inline constexpr std::uint64_t kStreamBlock = std::uint64_t{1} << 32;

struct CrossingEstimate {
  double p_hat = 0.0;
  std::uint64_t successes = 0;
  std::uint64_t n_samples = 0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  std::uint64_t config_digest = 0;

  static CrossingEstimate from_tally(const Tally& tally, std::uint64_t digest);
};

// Rectangle of the given aspect (width / height) with `rows` rows.
// Site kind: round(aspect * rows) columns. Bond kind: round(aspect * rows) + 1
// columns, so aspect 1 is the self-dual (n + 1) x n rectangle.
// Throws InvalidArgument if a dimension would be zero.
LatticeSpec crossing_rectangle(LatticeKind kind, int rows, double aspect);

struct CrossingRequest {
  LatticeKind kind = LatticeKind::bond;
  int rows = 64;
  double p = 0.5;
  double aspect = 1.0;
  Direction direction = Direction::left_right;
  std::uint64_t n_samples = 1000;
  SeedSchedule schedule{};
  int workers = 1;
};

CrossingEstimate estimate_crossing(const CrossingRequest& request);

// Exact crossing probability by enumeration (element_count <= 30): the
// probability-weighted fraction of configurations that cross.
double exact_crossing_probability(const LatticeSpec& spec, double p, Direction direction);

// ---- conformal crossing formula -------------------------------------------

// Cross-ratio eta of the rectangle corners for aspect = width / height.
// Solves 2 K(k) / K(k') = aspect for the elliptic modulus k by bisection
// (tolerance 1e-12) and returns eta = ((1 - k) / (1 + k))^2.
double cardy_eta(double aspect);

// F(eta) = Gamma(2/3) / (Gamma(1/3) Gamma(4/3)) * eta^(1/3) * 2F1(1/3, 2/3; 4/3; eta).
// Power series for eta <= 1/2, reflection F(eta) = 1 - F(1 - eta) above.
double cardy_formula(double eta);

// Limiting left-right crossing probability of a rectangle of the given aspect.
double cardy_crossing(double aspect);

namespace detail {
// Direct power series (no reflection); converges for 0 <= eta < 1, slowly near 1.
double cardy_series(double eta);
}  // namespace detail

// ---- near-critical family ---------------------------------------------------

struct ScalingFamily {
  double p_c = 0.5;
  double nu = 4.0 / 3.0;  // nu = +inf gives delta^(1/nu) = 1
  std::vector<double> t_grid;
  std::vector<int> sizes;  // linear sizes n, delta = 1 / n

  struct Density {
    double p;
    bool clamped;
  };
  Density density(double t, int n) const;
};

struct RGPoint {
  double t = 0.0;
  double p = 0.0;
  bool clamped = false;
  CrossingEstimate r1;  // unit square, n rows
  CrossingEstimate r2;  // doubled square at the same spacing, 2n rows
};

struct RGScanRequest {
  LatticeKind kind = LatticeKind::bond;
  int n = 128;
  ScalingFamily family;
  std::uint64_t n_samples = 1000;
  std::uint64_t master_seed = 0;
  int workers = 1;
};

// Points ordered by t; R1 and R2 use disjoint seed streams.
std::vector<RGPoint> rg_scan(const RGScanRequest& request);

struct FixedPointResult {
  double t_star = 0.0;
  double r_star = 0.0;
  double slope = 0.0;
  double slope_ci_low = 0.0;
  double slope_ci_high = 0.0;
  bool degenerate = false;  // every point lies on the diagonal
  std::size_t bootstrap_replicates = 0;
};

// Locates the t where R2 - R1 changes sign (piecewise-linear interpolation),
// R* = R1 interpolated there, slope = dR2/dR1 by least squares over the k
// points nearest in t. The slope interval is a parametric bootstrap
// (binomial resampling of every estimate) with percentile bounds.
// Throws InvalidArgument for < 5 points and Error("fixed point not bracketed")
// when R2 - R1 never changes sign.
FixedPointResult fixed_point_and_slope(const std::vector<RGPoint>& points, std::size_t k = 5,
                                       std::size_t bootstrap = 1000,
                                       std::uint64_t bootstrap_seed = 0x5eed);

struct CollapseTable {
  std::vector<double> t_grid;
  std::vector<int> sizes;
  Eigen::MatrixXd r1;  // r1(t index, size index)
  std::vector<std::vector<CrossingEstimate>> estimates;
  std::vector<std::vector<bool>> clamped;
  double spread = 0.0;  // max over t of (max over sizes - min over sizes)
};

struct CollapseRequest {
  LatticeKind kind = LatticeKind::bond;
  ScalingFamily family;
  std::uint64_t n_samples = 1000;
  std::uint64_t master_seed = 0;
  int workers = 1;
};

CollapseTable scaling_collapse(const CollapseRequest& request);

// Axis-aligned rectangle in unit-square coordinates.
struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
};

struct IndependenceRequest {
  LatticeKind kind = LatticeKind::bond;
  int n = 128;
  double p = 0.5;
  Rect a;
  Rect b;
  std::uint64_t n_samples = 1000;
  std::uint64_t master_seed = 0;
  int workers = 1;
};

struct IndependenceReport {
  std::uint64_t n_samples = 0;
  std::uint64_t count_a = 0, count_b = 0, count_both = 0;
  double p_a = 0.0, p_b = 0.0, p_both = 0.0;
  double covariance = 0.0;
  double covariance_sigma = 0.0;  // standard error; the reported band is +-3 sigma
  double separation = 0.0;        // gap between the rectangles
};

// Left-right crossing of each rectangle restricted to the sites it contains,
// on a shared n x n configuration. Throws InvalidArgument for overlapping or
// empty rectangles.
IndependenceReport independence_test(const IndependenceRequest& request);

// Sub-configuration of the sites whose centres lie in rect (bonds between two
// such sites are kept).
Configuration restrict_to(const Configuration& config, const Rect& rect);

// Effective critical density of site percolation on an n x n square: the p
// with estimated crossing probability 1/2, by bisection on coupled samples
// (shared seeds make the estimate monotone in p).
double effective_site_pc(int n, std::uint64_t n_samples, std::uint64_t master_seed, int workers,
                         double tolerance = 1e-4);

}  // namespace percweb
