#include "percweb/web.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "percweb/error.hpp"
#include "percweb/parallel.hpp"
#include "percweb/scaling.hpp"
#include "percweb/stats.hpp"

namespace percweb {

namespace {

std::uint64_t lattice_key(const Point& p, double spacing) {
  // Vertices sit on a half-integer lattice of pitch spacing; doubling makes
  // the key integral for both site centres and corner-based curves.
  const auto ix = static_cast<std::int64_t>(std::llround(2.0 * p.x() / spacing));
  const auto iy = static_cast<std::int64_t>(std::llround(2.0 * p.y() / spacing));
  return (static_cast<std::uint64_t>(ix) << 32) ^ static_cast<std::uint64_t>(iy & 0xffffffff);
}

// Andrew's monotone chain; returns hull vertices.
std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Point& o, const Point& a, const Point& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

Curve::Curve(std::vector<Point> vertices, double spacing)
    : vertices_(std::move(vertices)), spacing_(spacing) {
  if (!(spacing > 0.0)) throw InvalidArgument("curve spacing must be positive");
  if (vertices_.empty()) throw InvalidArgument("curve needs at least one vertex");
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(vertices_.size() * 2);
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (!seen.insert(lattice_key(vertices_[i], spacing_)).second)
      throw InvalidArgument("curve is not self-avoiding (vertex " + std::to_string(i) +
                            " repeats an earlier vertex)");
    if (i > 0) {
      const double step = (vertices_[i] - vertices_[i - 1]).norm();
      if (std::abs(step - spacing_) > 1e-9 * spacing_)
        throw InvalidArgument("curve step " + std::to_string(i) + " has length " +
                              std::to_string(step) + ", expected the spacing " +
                              std::to_string(spacing_));
    }
  }
}

Curve Curve::from_sites(const LatticeSpec& spec, std::span<const Site> sites) {
  const double d = spec.spacing();
  std::vector<Point> pts;
  pts.reserve(sites.size());
  for (const Site& s : sites) pts.emplace_back((s.x + 0.5) * d, (s.y + 0.5) * d);
  return Curve(std::move(pts), d);
}

double Curve::diameter() const {
  const auto hull = convex_hull(vertices_);
  double best = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i)
    for (std::size_t j = i + 1; j < hull.size(); ++j)
      best = std::max(best, (hull[i] - hull[j]).squaredNorm());
  return std::sqrt(best);
}

void write_polyline(const Curve& curve, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << "# percweb polyline\n# delta " << curve.spacing() << "\n# vertices " << curve.size()
      << "\n";
  for (const auto& v : curve.vertices()) out << v.x() << ' ' << v.y() << '\n';
  out.precision(old_precision);
}

Curve read_polyline(std::istream& in) {
  std::string line;
  double delta = 0.0;
  std::size_t expected = 0;
  bool have_delta = false;
  std::vector<Point> pts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, key;
      ls >> hash >> key;
      if (key == "delta") {
        ls >> delta;
        have_delta = true;
      } else if (key == "vertices") {
        ls >> expected;
      }
      continue;
    }
    double x = 0.0, y = 0.0;
    if (!(ls >> x >> y)) throw InvalidArgument("malformed polyline line: '" + line + "'");
    pts.emplace_back(x, y);
  }
  if (!have_delta) throw InvalidArgument("polyline is missing its '# delta' header");
  if (expected != 0 && expected != pts.size())
    throw InvalidArgument("polyline declares " + std::to_string(expected) + " vertices, found " +
                          std::to_string(pts.size()));
  return Curve(std::move(pts), delta);
}

namespace {

constexpr int kDx[4] = {1, 0, -1, 0};  // east, north, west, south
constexpr int kDy[4] = {0, 1, 0, -1};

}  // namespace

std::optional<Curve> extract_lowest_crossing(const Configuration& config) {
  return extract_lowest_crossing(config, label_clusters(config));
}

std::optional<Curve> extract_lowest_crossing(const Configuration& config,
                                             const ClusterLabeling& labeling) {
  const LatticeSpec& spec = config.spec();
  constexpr std::uint8_t need = side::left | side::right;
  int start_y = -1;
  for (int y = 0; y < spec.rows(); ++y) {
    const auto l = labeling.label(0, y);
    if (l != ClusterLabeling::kNoCluster && (labeling.boundary_touch(l) & need) == need) {
      start_y = y;
      break;
    }
  }
  if (start_y < 0) return std::nullopt;

  std::vector<Site> path{{0, start_y}};
  std::unordered_map<std::size_t, std::size_t> position;
  position.emplace(spec.site_index(0, start_y), 0);

  Site here{0, start_y};
  int heading = 0;  // east: the wall (bottom side) is on the right
  const std::size_t max_steps = 4 * spec.site_count() + 16;
  for (std::size_t step = 0; here.x != spec.cols() - 1; ++step) {
    if (step > max_steps) throw Error("wall follower failed to terminate");
    bool moved = false;
    for (int turn : {3, 0, 1, 2}) {  // right, straight, left, back
      const int dir = (heading + turn) & 3;
      const Site next{here.x + kDx[dir], here.y + kDy[dir]};
      if (!config.passable(here, next)) continue;
      heading = dir;
      here = next;
      moved = true;
      break;
    }
    if (!moved) throw Error("wall follower is stuck on an isolated crossing site");
    // chronological loop erasure
    const std::size_t key = spec.site_index(here.x, here.y);
    if (auto it = position.find(key); it != position.end()) {
      for (std::size_t k = it->second + 1; k < path.size(); ++k)
        position.erase(spec.site_index(path[k].x, path[k].y));
      path.resize(it->second + 1);
    } else {
      position.emplace(key, path.size());
      path.push_back(here);
    }
  }
  // The crossing proper leaves the left column for good at its last visit.
  std::size_t first = path.size() - 1;
  while (path[first].x != 0) --first;
  path.erase(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(first));
  return Curve::from_sites(spec, path);
}

std::optional<Curve> extract_geodesic(const Configuration& config, const ClusterLabeling& labeling,
                                      Site a, Site b) {
  const LatticeSpec& spec = config.spec();
  if (!spec.contains(a) || !spec.contains(b))
    throw InvalidArgument("geodesic endpoint outside the lattice");
  const auto la = labeling.label(a.x, a.y);
  if (la == ClusterLabeling::kNoCluster || la != labeling.label(b.x, b.y)) return std::nullopt;

  constexpr std::uint32_t unseen = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> parent(spec.site_count(), unseen);
  const auto ia = static_cast<std::uint32_t>(spec.site_index(a.x, a.y));
  const auto ib = static_cast<std::uint32_t>(spec.site_index(b.x, b.y));
  parent[ia] = ia;
  std::deque<std::uint32_t> queue{ia};
  while (!queue.empty() && parent[ib] == unseen) {
    const std::uint32_t cur = queue.front();
    queue.pop_front();
    const Site s = spec.site_at(cur);
    for (int dir = 0; dir < 4; ++dir) {
      const Site next{s.x + kDx[dir], s.y + kDy[dir]};
      if (!config.passable(s, next)) continue;
      const auto in = static_cast<std::uint32_t>(spec.site_index(next.x, next.y));
      if (parent[in] != unseen) continue;
      parent[in] = cur;
      queue.push_back(in);
    }
  }
  if (parent[ib] == unseen) return std::nullopt;
  std::vector<Site> path;
  for (std::uint32_t cur = ib;; cur = parent[cur]) {
    path.push_back(spec.site_at(cur));
    if (cur == ia) break;
  }
  std::reverse(path.begin(), path.end());
  return Curve::from_sites(spec, path);
}

std::size_t covering_count(const Curve& curve, double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("tortuosity scale must be positive");
  const auto& v = curve.vertices();
  const std::size_t n = v.size();
  if (n == 1) return 1;
  // Lattice distances equal to the scale must count as fitting despite rounding.
  const double s2 = scale * scale * (1.0 + 1e-9);
  std::size_t pieces = 0;
  std::size_t start = 0;
  while (start < n - 1) {
    std::size_t end = start + 1;
    while (end + 1 < n) {
      const Point& cand = v[end + 1];
      bool fits = true;
      for (std::size_t k = start; k <= end; ++k) {
        if ((v[k] - cand).squaredNorm() > s2) {
          fits = false;
          break;
        }
      }
      if (!fits) break;
      ++end;
    }
    ++pieces;
    start = end;
  }
  return pieces;
}

TortuosityProfile tortuosity_profile(const Curve& curve, std::span<const double> scales) {
  TortuosityProfile profile;
  profile.scales.assign(scales.begin(), scales.end());
  for (double s : profile.scales)
    if (!(s > 0.0)) throw InvalidArgument("tortuosity scale must be positive");
  std::sort(profile.scales.begin(), profile.scales.end(), std::greater<>());
  profile.counts.reserve(profile.scales.size());
  for (double s : profile.scales) profile.counts.push_back(covering_count(curve, s));
  return profile;
}

std::vector<double> dyadic_scales(double spacing, double min_multiple) {
  std::vector<double> out;
  for (double s = 0.5; s >= min_multiple * spacing * (1 - 1e-12); s *= 0.5) out.push_back(s);
  return out;
}

ExponentFit fit_tortuosity_exponent(const TortuosityProfile& profile) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < profile.scales.size(); ++i) {
    if (profile.counts[i] < 2) continue;
    x.push_back(std::log(1.0 / profile.scales[i]));
    y.push_back(std::log(static_cast<double>(profile.counts[i])));
  }
  if (x.size() < 3)
    throw InvalidArgument("curve too short for the scale grid: fewer than three scales with M >= 2");
  const LineFit fit = fit_line(x, y);
  return {fit.slope, std::exp(fit.intercept)};
}

namespace detail {

double holder_kappa_exhaustive(const Curve& curve, double alpha) {
  const auto& v = curve.vertices();
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  // weight[g] = ((n-1)/g)^(2 alpha), so kappa^2 = max d^2 * weight[gap]
  std::vector<double> weight(n);
  for (std::size_t g = 1; g < n; ++g)
    weight[g] = std::pow(static_cast<double>(n - 1) / static_cast<double>(g), 2 * alpha);
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      best = std::max(best, (v[i] - v[j]).squaredNorm() * weight[j - i]);
  return std::sqrt(best);
}

namespace {

struct Block {
  std::size_t lo, hi;  // inclusive vertex range
  Eigen::AlignedBox2d box;
  int left = -1, right = -1;
};

constexpr std::size_t kLeafSize = 32;

int build_blocks(std::vector<Block>& blocks, const std::vector<Point>& v, std::size_t lo,
                 std::size_t hi) {
  const int id = static_cast<int>(blocks.size());
  blocks.push_back({lo, hi, Eigen::AlignedBox2d(), -1, -1});
  if (hi - lo + 1 <= kLeafSize) {
    Eigen::AlignedBox2d box;
    for (std::size_t i = lo; i <= hi; ++i) box.extend(v[i]);
    blocks[id].box = box;
    return id;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  const int l = build_blocks(blocks, v, lo, mid);
  const int r = build_blocks(blocks, v, mid + 1, hi);
  blocks[id].left = l;
  blocks[id].right = r;
  blocks[id].box = blocks[l].box.merged(blocks[r].box);
  return id;
}

double max_box_distance2(const Eigen::AlignedBox2d& a, const Eigen::AlignedBox2d& b) {
  const double dx = std::max(b.max().x() - a.min().x(), a.max().x() - b.min().x());
  const double dy = std::max(b.max().y() - a.min().y(), a.max().y() - b.min().y());
  return dx * dx + dy * dy;
}

}  // namespace

double holder_kappa_pruned(const Curve& curve, double alpha) {
  const auto& v = curve.vertices();
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  const double span = static_cast<double>(n - 1);
  auto weight = [&](std::size_t gap) {
    return std::pow(span / static_cast<double>(gap), 2 * alpha);
  };

  // Lower bound from a coarse subsample of pairs (always includes endpoints).
  double best = 0.0;
  {
    const std::size_t stride = std::max<std::size_t>(1, n / 64);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
    if (idx.back() != n - 1) idx.push_back(n - 1);
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b)
        best = std::max(best, (v[idx[a]] - v[idx[b]]).squaredNorm() * weight(idx[b] - idx[a]));
  }

  std::vector<Block> blocks;
  blocks.reserve(4 * (n / kLeafSize + 1));
  build_blocks(blocks, v, 0, n - 1);
  const double step2 = curve.spacing() * curve.spacing();

  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [ia, ib] = stack.back();
    stack.pop_back();
    const Block& a = blocks[ia];
    const Block& b = blocks[ib];
    const std::size_t min_gap = ia == ib ? 1 : std::max<std::size_t>(1, b.lo - a.hi);
    const std::size_t max_gap = b.hi - a.lo;
    // Pair distance is bounded by the boxes and by the path length between.
    const double dist2 = std::min(max_box_distance2(a.box, b.box),
                                  step2 * static_cast<double>(max_gap) * static_cast<double>(max_gap));
    if (dist2 * weight(min_gap) <= best) continue;
    const bool a_leaf = a.left < 0;
    const bool b_leaf = b.left < 0;
    if (a_leaf && b_leaf) {
      for (std::size_t i = a.lo; i <= a.hi; ++i)
        for (std::size_t j = std::max(b.lo, i + 1); j <= b.hi; ++j)
          best = std::max(best, (v[i] - v[j]).squaredNorm() * weight(j - i));
      continue;
    }
    if (ia == ib) {
      stack.push_back({a.left, a.left});
      stack.push_back({a.right, a.right});
      stack.push_back({a.left, a.right});
    } else if (!a_leaf && (b_leaf || a.hi - a.lo >= b.hi - b.lo)) {
      stack.push_back({a.left, ib});
      stack.push_back({a.right, ib});
    } else {
      stack.push_back({ia, b.left});
      stack.push_back({ia, b.right});
    }
  }
  return std::sqrt(best);
}

}  // namespace detail

double holder_kappa(const Curve& curve, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("Hoelder exponent must lie in (0, 1]");
  return curve.size() > kPruneThreshold ? detail::holder_kappa_pruned(curve, alpha)
                                        : detail::holder_kappa_exhaustive(curve, alpha);
}

KappaSample holder_kappa_sample(const Curve& curve, double alpha) {
  return {curve.spacing(), alpha, holder_kappa(curve, alpha)};
}

KappaTailReport kappa_tail_report(std::span<const KappaSample> samples,
                                  std::span<const double> u_grid) {
  std::map<double, std::vector<double>, std::greater<>> groups;
  for (const auto& s : samples) groups[s.delta].push_back(s.kappa);
  if (groups.size() < 2) throw InvalidArgument("kappa tail report needs at least two spacings");

  KappaTailReport report;
  report.u_grid.assign(u_grid.begin(), u_grid.end());
  report.envelope.assign(u_grid.size(), 0.0);
  for (auto& [delta, kappas] : groups) {
    if (kappas.empty()) throw InvalidArgument("empty kappa group");
    std::sort(kappas.begin(), kappas.end());
    std::vector<double> tail;
    tail.reserve(u_grid.size());
    for (double u : u_grid) {
      const auto first = std::lower_bound(kappas.begin(), kappas.end(), u);
      tail.push_back(static_cast<double>(kappas.end() - first) / static_cast<double>(kappas.size()));
    }
    report.deltas.push_back(delta);
    report.tails.push_back(std::move(tail));
  }
  for (std::size_t k = 0; k < u_grid.size(); ++k) {
    double lo = 1.0, hi = 0.0;
    for (const auto& tail : report.tails) {
      lo = std::min(lo, tail[k]);
      hi = std::max(hi, tail[k]);
    }
    report.envelope[k] = hi;
    report.spread = std::max(report.spread, hi - lo);
  }
  return report;
}

std::vector<double> matched_u_grid(std::span<const KappaSample> samples, std::size_t points) {
  std::vector<double> pooled;
  pooled.reserve(samples.size());
  for (const auto& s : samples) pooled.push_back(s.kappa);
  std::vector<double> grid;
  grid.reserve(points);
  for (std::size_t k = 0; k < points; ++k)
    grid.push_back(quantile(pooled, (static_cast<double>(k) + 0.5) / static_cast<double>(points)));
  return grid;
}

namespace {

struct CurveStats {
  bool crossed = false;
  std::size_t vertices = 0;
  std::vector<std::size_t> profile;
  double kappa = 0.0;
};

}  // namespace

WebSample collect_web_sample(const WebSampleRequest& req) {
  const LatticeSpec spec = crossing_rectangle(req.kind, req.n, 1.0);
  WebSample out;
  out.delta = spec.spacing();
  out.scales = dyadic_scales(out.delta);

  const std::size_t batch = std::max<std::size_t>(64, req.n_curves / 4);
  const std::size_t max_tries = 200 * req.n_curves + 1000;
  std::vector<double> log_sum(out.scales.size(), 0.0);
  std::size_t next = 0;
  while (out.kappas.size() < req.n_curves && next < max_tries && !interrupted()) {
    const auto stats = parallel_map<CurveStats>(batch, req.workers, [&](std::uint64_t k) {
      CurveStats s;
      const auto seed = derive_seed(req.master_seed, req.stream_index + next + k);
      const auto curve = extract_lowest_crossing(sample_configuration(spec, req.p, seed));
      if (!curve) return s;
      s.crossed = true;
      s.vertices = curve->size();
      s.profile = tortuosity_profile(*curve, out.scales).counts;
      s.kappa = holder_kappa(*curve, req.alpha);
      return s;
    });
    for (std::size_t k = 0; k < stats.size() && out.kappas.size() < req.n_curves; ++k) {
      ++out.configurations_tried;
      const auto& s = stats[k];
      if (!s.crossed) continue;
      out.vertex_counts.push_back(s.vertices);
      out.kappas.push_back({out.delta, req.alpha, s.kappa});
      out.profiles.push_back(s.profile);
      for (std::size_t j = 0; j < s.profile.size(); ++j)
        log_sum[j] += std::log(static_cast<double>(s.profile[j]));
      try {
        out.exponents.push_back(fit_tortuosity_exponent({out.scales, s.profile}).exponent);
      } catch (const InvalidArgument&) {
        ++out.fit_failures;
      }
    }
    next += batch;
  }
  if (!out.kappas.empty()) {
    TortuosityProfile mean{out.scales, {}};
    std::vector<double> x, y;
    for (std::size_t j = 0; j < out.scales.size(); ++j) {
      const double lm = log_sum[j] / static_cast<double>(out.kappas.size());
      if (lm < std::log(2.0)) continue;
      x.push_back(std::log(1.0 / out.scales[j]));
      y.push_back(lm);
    }
    if (x.size() >= 3) {
      const LineFit f = fit_line(x, y);
      out.mean_profile_fit = {f.slope, std::exp(f.intercept)};
    }
  }
  return out;
}

}  // namespace percweb
