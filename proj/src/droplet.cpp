#include "percweb/droplet.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "percweb/error.hpp"
#include "percweb/stats.hpp"

namespace percweb {

std::uint64_t sample_poisson(SplitMix64& rng, double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw InvalidArgument("Poisson mean must be finite and >= 0");
  std::uint64_t total = 0;
  double remaining = mean;
  while (remaining > 0.0) {
    const double m = std::min(remaining, 16.0);
    remaining -= m;
    const double u = rng.uniform();
    double prob = std::exp(-m);
    double cdf = prob;
    std::uint64_t k = 0;
    while (u > cdf && k < 1000) {
      ++k;
      prob *= m / static_cast<double>(k);
      cdf += prob;
    }
    total += k;
  }
  return total;
}

DropletConfig sample_droplets(double lambda, double radius, std::uint64_t seed) {
  if (!(lambda >= 0.0)) throw InvalidArgument("droplet intensity must be >= 0");
  if (!(radius > 0.0)) throw InvalidArgument("droplet radius must be positive");
  DropletConfig config;
  config.radius = radius;
  config.intensity = lambda;
  config.seed = seed;
  const double side = config.padded_side();
  SplitMix64 rng(seed);
  const std::uint64_t count = sample_poisson(rng, lambda * side * side);
  config.centers.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const double x = -radius + side * rng.uniform();
    const double y = -radius + side * rng.uniform();
    config.centers.emplace_back(x, y);
  }
  return config;
}

DropletConfig thin(const DropletConfig& config, double keep) {
  if (!(keep >= 0.0 && keep <= 1.0)) throw InvalidArgument("thinning fraction must lie in [0, 1]");
  DropletConfig out;
  out.radius = config.radius;
  out.intensity = config.intensity * keep;
  out.seed = config.seed;
  SplitMix64 marks(mix64(config.seed ^ 0x7468696e6e696e67ULL));
  for (const auto& c : config.centers)
    if (marks.uniform() < keep) out.centers.push_back(c);
  return out;
}

std::array<Eigen::Vector2d, 4> RotatedRect::corners() const {
  const Eigen::Rotation2Dd rot(angle);
  return {center + rot * Eigen::Vector2d(-half_length, -half_width),
          center + rot * Eigen::Vector2d(half_length, -half_width),
          center + rot * Eigen::Vector2d(half_length, half_width),
          center + rot * Eigen::Vector2d(-half_length, half_width)};
}

Eigen::Vector2d RotatedRect::to_local(const Eigen::Vector2d& p) const {
  return Eigen::Rotation2Dd(-angle) * (p - center);
}

namespace {

struct DiscSets {
  std::vector<std::uint32_t> parent;
  std::uint32_t find(std::uint32_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

bool droplet_crossing(const DropletConfig& config, const RotatedRect& rect) {
  if (!(rect.half_length > 0.0 && rect.half_width > 0.0))
    throw InvalidArgument("rectangle needs positive extents");
  constexpr double slack = 1e-12;
  for (const auto& c : rect.corners())
    if (c.x() < -slack || c.y() < -slack || c.x() > 1 + slack || c.y() > 1 + slack)
      throw InvalidArgument("rectangle escapes the sampled region (must stay inside the unit square)");

  const double r = config.radius;
  const double r2 = r * r;
  const double L = rect.half_length;
  const double W = rect.half_width;

  // Discs meeting the rectangle, with their side contacts.
  std::vector<Eigen::Vector2d> pts;
  std::vector<std::uint8_t> contact;  // 1 = left, 2 = right
  for (const auto& c : config.centers) {
    const Eigen::Vector2d q = rect.to_local(c);
    const double ox = std::max(std::abs(q.x()) - L, 0.0);
    const double oy = std::max(std::abs(q.y()) - W, 0.0);
    if (ox * ox + oy * oy > r2) continue;
    std::uint8_t mask = 0;
    const double dl = q.x() + L, dr = q.x() - L;
    if (dl * dl + oy * oy <= r2) mask |= 1;
    if (dr * dr + oy * oy <= r2) mask |= 2;
    pts.push_back(c);
    contact.push_back(mask);
  }
  const auto n = static_cast<std::uint32_t>(pts.size());
  if (n == 0) return false;

  // Nodes n and n + 1 are the left and right sides.
  DiscSets sets;
  sets.parent.resize(n + 2);
  for (std::uint32_t i = 0; i < n + 2; ++i) sets.parent[i] = i;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (contact[i] & 1) sets.unite(i, n);
    if (contact[i] & 2) sets.unite(i, n + 1);
  }

  // Bucket grid with cells of side 2r: touching discs are in neighbouring cells.
  const double cell = 2.0 * r;
  Eigen::Vector2d lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const int gx = static_cast<int>((hi.x() - lo.x()) / cell) + 1;
  const int gy = static_cast<int>((hi.y() - lo.y()) / cell) + 1;
  std::vector<std::vector<std::uint32_t>> grid(static_cast<std::size_t>(gx) * gy);
  auto cell_of = [&](const Eigen::Vector2d& p) {
    const int cx = std::min(gx - 1, static_cast<int>((p.x() - lo.x()) / cell));
    const int cy = std::min(gy - 1, static_cast<int>((p.y() - lo.y()) / cell));
    return std::pair{cx, cy};
  };
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto [cx, cy] = cell_of(pts[i]);
    grid[static_cast<std::size_t>(cy) * gx + cx].push_back(i);
  }
  const double reach2 = 4.0 * r2;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto [cx, cy] = cell_of(pts[i]);
    for (int yy = std::max(cy - 1, 0); yy <= std::min(cy + 1, gy - 1); ++yy)
      for (int xx = std::max(cx - 1, 0); xx <= std::min(cx + 1, gx - 1); ++xx)
        for (std::uint32_t j : grid[static_cast<std::size_t>(yy) * gx + xx])
          if (j > i && (pts[i] - pts[j]).squaredNorm() <= reach2) sets.unite(i, j);
  }
  return sets.find(n) == sets.find(n + 1);
}

RotationReport rotation_invariance_report(const RotationRequest& req) {
  if (req.angles_deg.empty()) throw InvalidArgument("rotation report needs at least one angle");
  if (req.n_samples < 1) throw InvalidArgument("n_samples must be at least 1");
  RotationReport report;
  report.angles_deg = req.angles_deg;
  for (std::size_t a = 0; a < req.angles_deg.size(); ++a) {
    RotatedRect rect;
    rect.half_length = 0.5 * req.length;
    rect.half_width = 0.5 * req.width;
    rect.angle = req.angles_deg[a] * std::numbers::pi / 180.0;
    // validate geometry before sampling
    droplet_crossing(DropletConfig{{}, req.radius, 0.0, 0}, rect);
    const std::uint64_t base = a * kStreamBlock;
    const Tally tally = parallel_tally(req.n_samples, req.workers, [&](std::uint64_t i) {
      return droplet_crossing(
          sample_droplets(req.lambda, req.radius, derive_seed(req.master_seed, base + i)), rect);
    });
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : {req.lambda, req.radius, req.length, req.width, req.angles_deg[a]}) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      h = fnv1a(&bits, sizeof bits, h);
    }
    h = fnv1a(&req.master_seed, sizeof req.master_seed, h);
    h = fnv1a(&base, sizeof base, h);
    report.estimates.push_back(CrossingEstimate::from_tally(tally, h));
  }
  for (std::size_t i = 0; i < report.estimates.size(); ++i)
    for (std::size_t j = i + 1; j < report.estimates.size(); ++j) {
      const auto& a = report.estimates[i];
      const auto& b = report.estimates[j];
      report.max_pairwise_z = std::max(
          report.max_pairwise_z, two_proportion_z(a.successes, a.n_samples, b.successes, b.n_samples));
    }
  return report;
}

double critical_intensity(double radius, std::uint64_t n_samples, std::uint64_t master_seed,
                          int workers, double relative_tolerance) {
  if (!(radius > 0.0)) throw InvalidArgument("droplet radius must be positive");
  const RotatedRect unit{{0.5, 0.5}, 0.5, 0.5, 0.0};
  // Filling factor 3 is far above the continuum threshold (about 1.13).
  double hi = 3.0 / (std::numbers::pi * radius * radius);
  const double top = hi;
  double lo = 0.0;
  auto crossing_count = [&](double lambda) {
    return parallel_tally(n_samples, workers, [&](std::uint64_t i) {
      const auto base = sample_droplets(top, radius, derive_seed(master_seed, i));
      return droplet_crossing(thin(base, lambda / top), unit);
    });
  };
  while ((hi - lo) > relative_tolerance * hi) {
    const double mid = 0.5 * (lo + hi);
    const Tally t = crossing_count(mid);
    if (2 * t.successes >= t.trials)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

void write_droplets(const DropletConfig& config, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << "# percweb droplets\n# radius " << config.radius << "\n# intensity " << config.intensity
      << "\n# seed " << config.seed << "\n# centers " << config.centers.size() << "\n";
  for (const auto& c : config.centers) out << c.x() << ' ' << c.y() << '\n';
  out.precision(old_precision);
}

DropletConfig read_droplets(std::istream& in) {
  DropletConfig config;
  std::string line;
  bool have_radius = false;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, key;
      ls >> hash >> key;
      if (key == "radius") {
        ls >> config.radius;
        have_radius = true;
      } else if (key == "intensity") {
        ls >> config.intensity;
      } else if (key == "seed") {
        ls >> config.seed;
      } else if (key == "centers") {
        ls >> expected;
      }
      continue;
    }
    double x = 0.0, y = 0.0;
    if (!(ls >> x >> y)) throw InvalidArgument("malformed droplet line: '" + line + "'");
    config.centers.emplace_back(x, y);
  }
  if (!have_radius) throw InvalidArgument("droplet file is missing its '# radius' header");
  if (expected != 0 && expected != config.centers.size())
    throw InvalidArgument("droplet file declares " + std::to_string(expected) + " centers, found " +
                          std::to_string(config.centers.size()));
  return config;
}

}  // namespace percweb
