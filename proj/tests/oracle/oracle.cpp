#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>

#include "percweb/clusters.hpp"

namespace percweb::oracle {

std::vector<Site> open_neighbours(const Configuration& config, Site s) {
  const LatticeSpec& spec = config.spec();
  const int c = spec.cols(), r = spec.rows();
  const std::size_t sites = spec.site_count();
  auto bit = [&](std::size_t i) { return config.occupied(i); };
  auto idx = [&](int x, int y) { return static_cast<std::size_t>(y) * c + x; };
  std::vector<Site> out;
  if (spec.kind() == LatticeKind::site) {
    if (!bit(idx(s.x, s.y))) return out;
    const Site cand[4] = {{s.x + 1, s.y}, {s.x, s.y + 1}, {s.x - 1, s.y}, {s.x, s.y - 1}};
    for (const Site& n : cand)
      if (n.x >= 0 && n.y >= 0 && n.x < c && n.y < r && bit(idx(n.x, n.y))) out.push_back(n);
    return out;
  }
  if (s.x + 1 < c && bit(idx(s.x, s.y))) out.push_back({s.x + 1, s.y});
  if (s.y + 1 < r && bit(sites + idx(s.x, s.y))) out.push_back({s.x, s.y + 1});
  if (s.x > 0 && bit(idx(s.x - 1, s.y))) out.push_back({s.x - 1, s.y});
  if (s.y > 0 && bit(sites + idx(s.x, s.y - 1))) out.push_back({s.x, s.y - 1});
  return out;
}

std::vector<std::uint32_t> bfs_labels(const Configuration& config) {
  const LatticeSpec& spec = config.spec();
  const std::size_t n = spec.site_count();
  std::vector<std::uint32_t> label(n, ClusterLabeling::kNoCluster);
  for (std::size_t start = 0; start < n; ++start) {
    if (label[start] != ClusterLabeling::kNoCluster) continue;
    if (spec.kind() == LatticeKind::site && !config.occupied(start)) continue;
    label[start] = static_cast<std::uint32_t>(start);
    std::deque<std::size_t> queue{start};
    while (!queue.empty()) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      for (const Site& nb : open_neighbours(config, spec.site_at(cur))) {
        const std::size_t j = spec.site_index(nb.x, nb.y);
        if (label[j] != ClusterLabeling::kNoCluster) continue;
        label[j] = static_cast<std::uint32_t>(start);
        queue.push_back(j);
      }
    }
  }
  return label;
}

bool path_exists(const Configuration& config, bool left_right) {
  const LatticeSpec& spec = config.spec();
  std::vector<char> seen(spec.site_count(), 0);
  std::vector<Site> stack;
  auto open = [&](Site s) {
    return spec.kind() == LatticeKind::bond || config.occupied(spec.site_index(s.x, s.y));
  };
  const int len = left_right ? spec.rows() : spec.cols();
  for (int k = 0; k < len; ++k) {
    const Site s = left_right ? Site{0, k} : Site{k, 0};
    if (open(s)) {
      stack.push_back(s);
      seen[spec.site_index(s.x, s.y)] = 1;
    }
  }
  while (!stack.empty()) {
    const Site s = stack.back();
    stack.pop_back();
    if (left_right ? s.x == spec.cols() - 1 : s.y == spec.rows() - 1) return true;
    for (const Site& nb : open_neighbours(config, s)) {
      char& flag = seen[spec.site_index(nb.x, nb.y)];
      if (!flag) {
        flag = 1;
        stack.push_back(nb);
      }
    }
  }
  return false;
}

std::vector<std::vector<Site>> crossing_paths(const Configuration& config) {
  const LatticeSpec& spec = config.spec();
  std::vector<std::vector<Site>> out;
  std::vector<Site> path;
  std::vector<char> on_path(spec.site_count(), 0);
  std::function<void(Site)> extend = [&](Site s) {
    path.push_back(s);
    on_path[spec.site_index(s.x, s.y)] = 1;
    if (s.x == spec.cols() - 1) {
      out.push_back(path);
    } else {
      for (const Site& nb : open_neighbours(config, s))
        if (nb.x > 0 && !on_path[spec.site_index(nb.x, nb.y)]) extend(nb);
    }
    on_path[spec.site_index(s.x, s.y)] = 0;
    path.pop_back();
  };
  for (int y = 0; y < spec.rows(); ++y) {
    const Site s{0, y};
    if (spec.kind() == LatticeKind::site && !config.occupied(spec.site_index(0, y))) continue;
    extend(s);
  }
  return out;
}

std::vector<char> region_below(const LatticeSpec& spec, const std::vector<Site>& path) {
  const int w = 2 * spec.cols() - 1;
  const int h = 2 * spec.rows() - 1;
  std::vector<char> wall(static_cast<std::size_t>(w) * h, 0);
  auto at = [&](int x, int y) -> std::size_t { return static_cast<std::size_t>(y) * w + x; };
  for (std::size_t k = 0; k < path.size(); ++k) {
    wall[at(2 * path[k].x, 2 * path[k].y)] = 1;
    if (k > 0)
      wall[at(path[k].x + path[k - 1].x, path[k].y + path[k - 1].y)] = 1;
  }
  std::vector<char> below(wall.size(), 0);
  std::deque<std::pair<int, int>> queue;
  for (int x = 0; x < w; ++x)
    if (!wall[at(x, 0)]) {
      below[at(x, 0)] = 1;
      queue.emplace_back(x, 0);
    }
  while (!queue.empty()) {
    const auto [x, y] = queue.front();
    queue.pop_front();
    const int nx[4] = {x + 1, x - 1, x, x};
    const int ny[4] = {y, y, y + 1, y - 1};
    for (int d = 0; d < 4; ++d) {
      if (nx[d] < 0 || ny[d] < 0 || nx[d] >= w || ny[d] >= h) continue;
      const std::size_t j = at(nx[d], ny[d]);
      if (wall[j] || below[j]) continue;
      below[j] = 1;
      queue.emplace_back(nx[d], ny[d]);
    }
  }
  return below;
}

std::optional<std::vector<Site>> lowest_crossing(const Configuration& config) {
  const auto paths = crossing_paths(config);
  if (paths.empty()) return std::nullopt;
  std::size_t best = std::numeric_limits<std::size_t>::max();
  std::size_t best_count = 0;
  const std::vector<Site>* best_path = nullptr;
  for (const auto& p : paths) {
    const auto below = region_below(config.spec(), p);
    const auto count = static_cast<std::size_t>(std::count(below.begin(), below.end(), 1));
    if (count < best) {
      best = count;
      best_count = 1;
      best_path = &p;
    } else if (count == best) {
      ++best_count;
    }
  }
  if (best_count != 1) throw std::logic_error("lowest crossing oracle: minimum is not unique");
  return *best_path;
}

std::size_t min_cover_dp(const Curve& curve, double scale) {
  const auto& v = curve.vertices();
  const std::size_t n = v.size();
  if (n == 1) return 1;
  auto diameter = [&](std::size_t i, std::size_t j) {
    double d = 0.0;
    for (std::size_t a = i; a <= j; ++a)
      for (std::size_t b = a + 1; b <= j; ++b) d = std::max(d, (v[a] - v[b]).norm());
    return d;
  };
  constexpr std::size_t inf = std::numeric_limits<std::size_t>::max() / 2;
  std::vector<std::size_t> best(n, inf);
  best[0] = 0;
  for (std::size_t j = 1; j < n; ++j)
    for (std::size_t i = 0; i < j; ++i) {
      // a single step is always admissible as a piece
      if (j - i > 1 && diameter(i, j) > scale * (1.0 + 5e-10)) continue;
      best[j] = std::min(best[j], best[i] + 1);
    }
  return best[n - 1];
}

Curve hilbert_curve(int order) {
  const int side = 1 << order;
  std::vector<Point> pts;
  for (int d = 0; d < side * side; ++d) {
    int x = 0, y = 0, t = d;
    for (int s = 1; s < side; s *= 2) {
      const int rx = 1 & (t / 2);
      const int ry = 1 & (t ^ rx);
      if (ry == 0) {
        if (rx == 1) {
          x = s - 1 - x;
          y = s - 1 - y;
        }
        std::swap(x, y);
      }
      x += s * rx;
      y += s * ry;
      t /= 4;
    }
    pts.emplace_back((x + 0.5) / side, (y + 0.5) / side);
  }
  return Curve(std::move(pts), 1.0 / side);
}

Curve zigzag_curve(int n) {
  std::vector<Point> pts;
  for (int y = 0; y < n; ++y)
    for (int k = 0; k < n; ++k) {
      const int x = (y % 2 == 0) ? k : n - 1 - k;
      pts.emplace_back((x + 0.5) / n, (y + 0.5) / n);
    }
  return Curve(std::move(pts), 1.0 / n);
}

Curve straight_curve(int steps, double spacing) {
  std::vector<Point> pts;
  for (int i = 0; i <= steps; ++i) pts.emplace_back(i * spacing, 0.0);
  return Curve(std::move(pts), spacing);
}

namespace {

// 10-point Gauss-Legendre on equal panels
template <class F>
double gauss_legendre(F f, double upper, int panels) {
  static const double node[5] = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                                 0.8650633666889845, 0.9739065285171717};
  static const double weight[5] = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                                   0.1494513491505806, 0.0666713443086881};
  const double h = upper / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * h;
    for (int k = 0; k < 5; ++k)
      for (double sgn : {-1.0, 1.0}) sum += weight[k] * h / 2 * f(mid + sgn * node[k] * h / 2);
  }
  return sum;
}

}  // namespace

double cardy_quadrature(double eta) {
  if (eta <= 0.0) return 0.0;
  if (eta >= 1.0) return 1.0;
  const double beta = std::tgamma(1.0 / 3.0) * std::tgamma(1.0 / 3.0) / std::tgamma(2.0 / 3.0);
  const double x = std::cbrt(eta);
  if (eta <= 0.5) {
    const double head = gauss_legendre([](double u) { return std::pow(1.0 - u * u * u, -2.0 / 3.0); }, x, 4000);
    return 3.0 * head / beta;
  }
  // tail from x to 1 with u = 1 - v^3, which removes the endpoint singularity;
  // the full integral is beta / 3
  const double one_minus_x = (1.0 - eta) / (1.0 + x + x * x);
  const double tail = gauss_legendre(
      [](double v) {
        const double v3 = v * v * v;
        return 3.0 * std::pow(3.0 - 3.0 * v3 + v3 * v3, -2.0 / 3.0);
      },
      std::cbrt(one_minus_x), 4000);
  return 1.0 - 3.0 * tail / beta;
}

namespace {

struct LocalDisc {
  Eigen::Vector2d local;
};

std::vector<Eigen::Vector2d> meeting_discs(const DropletConfig& config, const RotatedRect& rect) {
  std::vector<Eigen::Vector2d> out;
  for (const auto& c : config.centers) {
    const Eigen::Vector2d q = rect.to_local(c);
    const double ox = std::max(std::abs(q.x()) - rect.half_length, 0.0);
    const double oy = std::max(std::abs(q.y()) - rect.half_width, 0.0);
    if (std::hypot(ox, oy) <= config.radius) out.push_back(q);
  }
  return out;
}

double segment_distance(const Eigen::Vector2d& q, double x, double half) {
  return std::hypot(q.x() - x, std::max(std::abs(q.y()) - half, 0.0));
}

}  // namespace

bool raster_droplet_crossing(const DropletConfig& config, const RotatedRect& rect,
                             double resolution) {
  // Everything is done in the rectangle frame, where the sides are axis-aligned.
  const auto discs = meeting_discs(config, rect);
  if (discs.empty()) return false;
  const double r = config.radius;
  const double x0 = -rect.half_length - r, y0 = -rect.half_width - r;
  const int w = static_cast<int>(std::ceil((2 * rect.half_length + 2 * r) / resolution)) + 1;
  const int h = static_cast<int>(std::ceil((2 * rect.half_width + 2 * r) / resolution)) + 1;
  std::vector<char> inside(static_cast<std::size_t>(w) * h, 0);
  auto at = [&](int i, int j) { return static_cast<std::size_t>(j) * w + i; };
  for (const auto& q : discs) {
    const int i0 = std::max(0, static_cast<int>((q.x() - r - x0) / resolution) - 1);
    const int i1 = std::min(w - 1, static_cast<int>((q.x() + r - x0) / resolution) + 1);
    const int j0 = std::max(0, static_cast<int>((q.y() - r - y0) / resolution) - 1);
    const int j1 = std::min(h - 1, static_cast<int>((q.y() + r - y0) / resolution) + 1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) {
        const double px = x0 + (i + 0.5) * resolution, py = y0 + (j + 0.5) * resolution;
        if (std::hypot(px - q.x(), py - q.y()) <= r) inside[at(i, j)] = 1;
      }
  }
  std::vector<char> reached(inside.size(), 0);
  std::deque<std::pair<int, int>> queue;
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      if (!inside[at(i, j)]) continue;
      const Eigen::Vector2d p(x0 + (i + 0.5) * resolution, y0 + (j + 0.5) * resolution);
      if (segment_distance(p, -rect.half_length, rect.half_width) <= resolution) {
        reached[at(i, j)] = 1;
        queue.emplace_back(i, j);
      }
    }
  while (!queue.empty()) {
    const auto [i, j] = queue.front();
    queue.pop_front();
    const Eigen::Vector2d p(x0 + (i + 0.5) * resolution, y0 + (j + 0.5) * resolution);
    if (segment_distance(p, rect.half_length, rect.half_width) <= resolution) return true;
    const int ni[4] = {i + 1, i - 1, i, i};
    const int nj[4] = {j, j, j + 1, j - 1};
    for (int d = 0; d < 4; ++d) {
      if (ni[d] < 0 || nj[d] < 0 || ni[d] >= w || nj[d] >= h) continue;
      const std::size_t k = at(ni[d], nj[d]);
      if (!inside[k] || reached[k]) continue;
      reached[k] = 1;
      queue.emplace_back(ni[d], nj[d]);
    }
  }
  return false;
}

double grazing_margin(const DropletConfig& config, const RotatedRect& rect) {
  const double r = config.radius;
  double margin = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Vector2d> local;
  for (const auto& c : config.centers) local.push_back(rect.to_local(c));
  for (std::size_t i = 0; i < local.size(); ++i) {
    const auto& q = local[i];
    const double ox = std::max(std::abs(q.x()) - rect.half_length, 0.0);
    const double oy = std::max(std::abs(q.y()) - rect.half_width, 0.0);
    margin = std::min(margin, std::abs(std::hypot(ox, oy) - r));
    margin = std::min(margin, std::abs(segment_distance(q, -rect.half_length, rect.half_width) - r));
    margin = std::min(margin, std::abs(segment_distance(q, rect.half_length, rect.half_width) - r));
    for (std::size_t j = i + 1; j < local.size(); ++j)
      margin = std::min(margin, std::abs((q - local[j]).norm() - 2 * r));
  }
  return margin;
}

}  // namespace percweb::oracle
