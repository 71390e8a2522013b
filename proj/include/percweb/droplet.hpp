#pragma once

// Boolean (droplet) continuum percolation: Poisson centres of fixed-radius
// discs in the unit square padded by one radius, and crossings of rotated
// rectangles.

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "percweb/scaling.hpp"

namespace percweb {

struct DropletConfig {
  std::vector<Eigen::Vector2d> centers;  // inside [-radius, 1 + radius]^2
  double radius = 0.0;
  double intensity = 0.0;  // expected centres per unit area
  std::uint64_t seed = 0;

  double padded_side() const { return 1.0 + 2.0 * radius; }
};

// Poisson(lambda * padded area) count, then uniform centres; one SplitMix64
// stream per seed. Throws InvalidArgument for lambda < 0 or radius <= 0.
DropletConfig sample_droplets(double lambda, double radius, std::uint64_t seed);

// Poisson variate by inversion on chunks of mean <= 16; portable and exact
// up to floating point.
std::uint64_t sample_poisson(SplitMix64& rng, double mean);

// Independent thinning: keep each centre with probability keep; the marks come
// from a stream derived from the configuration seed, so thinning one sample at
// several keep fractions gives nested configurations.
DropletConfig thin(const DropletConfig& config, double keep);

// Rectangle centred at `center`, rotated by `angle` (radians). The crossing
// runs along the rotated x-axis between the two short ends ("left" at local
// x = -half_length, "right" at +half_length).
struct RotatedRect {
  Eigen::Vector2d center{0.5, 0.5};
  double half_length = 0.5;
  double half_width = 0.5;
  double angle = 0.0;

  std::array<Eigen::Vector2d, 4> corners() const;
  // Coordinates in the rectangle frame.
  Eigen::Vector2d to_local(const Eigen::Vector2d& p) const;
};

// True iff the discs meeting the rectangle contain a chain (consecutive centres
// at distance <= 2 radius) from a disc meeting the left side to one meeting
// the right side. Throws InvalidArgument if the rectangle leaves the unit square.
bool droplet_crossing(const DropletConfig& config, const RotatedRect& rect);

struct RotationRequest {
  double lambda = 0.0;
  double radius = 0.02;
  double length = 0.6;  // rectangle extent along the crossing direction
  double width = 0.6;
  std::vector<double> angles_deg;
  std::uint64_t n_samples = 1000;
  std::uint64_t master_seed = 0;
  int workers = 1;
};

struct RotationReport {
  std::vector<double> angles_deg;
  std::vector<CrossingEstimate> estimates;
  double max_pairwise_z = 0.0;
};

// Independent seed block per angle; rectangles centred at (1/2, 1/2).
RotationReport rotation_invariance_report(const RotationRequest& request);

// lambda with unit-square left-right crossing probability 1/2, by bisection on
// thinned samples of one high-intensity realization per seed (monotone in
// lambda per sample).
double critical_intensity(double radius, std::uint64_t n_samples, std::uint64_t master_seed,
                          int workers, double relative_tolerance = 1e-3);

// Plain-text centres: "# percweb droplets", "# radius <r>", "# intensity <l>",
// "# seed <s>", "# centers <count>", then "<x> <y>" per line.
void write_droplets(const DropletConfig& config, std::ostream& out);
DropletConfig read_droplets(std::istream& in);

}  // namespace percweb
