#pragma once

// Connecting curves extracted from configurations and their regularity
// statistics: tortuosity profiles M(s), fitted exponents, Hoelder constants
// kappa and the tail distribution of kappa across lattice spacings.

#include <Eigen/Geometry>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "percweb/clusters.hpp"
#include "percweb/core.hpp"

namespace percweb {

using Point = Eigen::Vector2d;

// Polygonal self-avoiding lattice path in the unit square. Construction
// checks both invariants (no repeated vertex, every step of length spacing)
// and throws InvalidArgument otherwise.
class Curve {
 public:
  Curve(std::vector<Point> vertices, double spacing);

  // Macroscopic curve through the given sites of spec (site centres).
  static Curve from_sites(const LatticeSpec& spec, std::span<const Site> sites);

  const std::vector<Point>& vertices() const { return vertices_; }
  const Point& operator[](std::size_t i) const { return vertices_[i]; }
  std::size_t size() const { return vertices_.size(); }
  double spacing() const { return spacing_; }
  double length() const { return spacing_ * static_cast<double>(vertices_.size() - 1); }
  // Largest distance between two vertices (convex hull + pairwise scan).
  double diameter() const;

 private:
  std::vector<Point> vertices_;
  double spacing_;
};

// Plain-text polyline:
//   # percweb polyline
//   # delta <spacing>
//   # vertices <count>
//   <x> <y>            one line per vertex, 17 significant digits
void write_polyline(const Curve& curve, std::ostream& out);
Curve read_polyline(std::istream& in);

// Lowest left-right crossing: the right-hand wall follower started at the
// lowest left-column site of a crossing cluster, heading east, stopped at the
// first right-column site, loop-erased and cut to start at its last
// left-column site. Absent when there is no crossing.
std::optional<Curve> extract_lowest_crossing(const Configuration& config);
std::optional<Curve> extract_lowest_crossing(const Configuration& config,
                                             const ClusterLabeling& labeling);

// Breadth-first shortest open path from a to b, neighbours tried in the order
// east, north, west, south. Throws InvalidArgument if a or b is off the grid.
std::optional<Curve> extract_geodesic(const Configuration& config, const ClusterLabeling& labeling,
                                      Site a, Site b);

struct TortuosityProfile {
  std::vector<double> scales;       // decreasing
  std::vector<std::size_t> counts;  // M(s) for each scale
};

// Minimal number of consecutive sub-paths (adjacent pieces share their end
// vertex) of vertex diameter <= s covering the curve. Computed greedily; a
// single lattice step longer than s still counts as one piece. Diameters are
// compared with a relative tolerance of 1e-9.
std::size_t covering_count(const Curve& curve, double scale);

// Scales are sorted into decreasing order. Throws InvalidArgument on a
// nonpositive scale.
TortuosityProfile tortuosity_profile(const Curve& curve, std::span<const double> scales);

// Dyadic grid 1/2, 1/4, ... down to the smallest power not below
// min_multiple * spacing.
std::vector<double> dyadic_scales(double spacing, double min_multiple = 8.0);

struct ExponentFit {
  double exponent = 0.0;  // slope of log M against log(1/s); estimates 1/alpha
  double kappa = 0.0;     // exp(intercept): M(s) ~ kappa * s^-exponent
};

// Least squares over the scales with M(s) >= 2; needs at least three of them
// (InvalidArgument otherwise: curve too short for the scale grid).
ExponentFit fit_tortuosity_exponent(const TortuosityProfile& profile);

struct KappaSample {
  double delta = 0.0;
  double alpha = 0.0;
  double kappa = 0.0;
};

// Smallest kappa with |g(t_i) - g(t_j)| <= kappa |t_i - t_j|^alpha over all
// vertex pairs, t_i = i / (V - 1). Exact. Curves above kPruneThreshold
// vertices use a branch-and-bound over index blocks whose bounding boxes
// bound every pair distance inside the block pair.
inline constexpr std::size_t kPruneThreshold = 4096;
double holder_kappa(const Curve& curve, double alpha);
KappaSample holder_kappa_sample(const Curve& curve, double alpha);

namespace detail {
double holder_kappa_exhaustive(const Curve& curve, double alpha);
double holder_kappa_pruned(const Curve& curve, double alpha);
}  // namespace detail

struct KappaTailReport {
  std::vector<double> u_grid;
  std::vector<double> deltas;                   // decreasing
  std::vector<std::vector<double>> tails;       // tails[g][k] = fraction{kappa >= u_k}
  std::vector<double> envelope;                 // pointwise max over deltas
  double spread = 0.0;                          // max_k (max_g - min_g) tails[g][k]
};

// Groups samples by delta. Needs >= 2 groups; throws InvalidArgument otherwise.
KappaTailReport kappa_tail_report(std::span<const KappaSample> samples,
                                  std::span<const double> u_grid);
// Pooled sample quantiles at levels (k + 1/2) / points.
std::vector<double> matched_u_grid(std::span<const KappaSample> samples, std::size_t points);

// Lowest crossings of independent configurations on the square crossing
// rectangle (bond: (n + 1) x n, site: n x n) at density p, with their
// tortuosity fits and Hoelder constants.
struct WebSampleRequest {
  LatticeKind kind = LatticeKind::bond;
  int n = 64;
  double p = 0.5;
  std::size_t n_curves = 100;
  double alpha = 0.6;
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
  int workers = 1;
};

struct WebSample {
  double delta = 0.0;
  std::vector<double> scales;
  std::vector<std::size_t> vertex_counts;
  std::vector<double> exponents;           // one per curve with a valid fit
  std::vector<KappaSample> kappas;         // one per curve
  std::vector<std::vector<std::size_t>> profiles;  // M(s) per curve
  std::size_t configurations_tried = 0;
  std::size_t fit_failures = 0;
  ExponentFit mean_profile_fit;            // fit of the geometric-mean profile
};

// Configurations are tried in index order; the first n_curves that cross are
// kept, so the result does not depend on the worker count.
WebSample collect_web_sample(const WebSampleRequest& request);

}  // namespace percweb
