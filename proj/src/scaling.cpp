#include "percweb/scaling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "percweb/error.hpp"
#include "percweb/stats.hpp"

namespace percweb {

CrossingEstimate CrossingEstimate::from_tally(const Tally& tally, std::uint64_t digest) {
  CrossingEstimate e;
  e.successes = tally.successes;
  e.n_samples = tally.trials;
  e.p_hat = tally.trials ? static_cast<double>(tally.successes) / static_cast<double>(tally.trials) : 0.0;
  const Interval ci = wilson_interval(tally.successes, tally.trials);
  e.ci_low = ci.low;
  e.ci_high = ci.high;
  e.config_digest = digest;
  return e;
}

LatticeSpec crossing_rectangle(LatticeKind kind, int rows, double aspect) {
  if (!(aspect > 0.0) || !std::isfinite(aspect))
    throw InvalidArgument("aspect ratio must be positive and finite");
  const long width = std::lround(aspect * rows);
  if (rows < 1 || width < 1)
    throw InvalidArgument("lattice too small to realize aspect " + std::to_string(aspect) +
                          " with " + std::to_string(rows) + " rows");
  const long cols = kind == LatticeKind::bond ? width + 1 : width;
  return LatticeSpec(kind, static_cast<int>(cols), rows);
}

namespace {

template <typename T>
void mix_into(std::uint64_t& h, const T& value) {
  h = fnv1a(&value, sizeof(T), h);
}

std::uint64_t request_digest(const CrossingRequest& r) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  mix_into(h, static_cast<std::uint8_t>(r.kind));
  mix_into(h, r.rows);
  mix_into(h, std::bit_cast<std::uint64_t>(r.p));
  mix_into(h, std::bit_cast<std::uint64_t>(r.aspect));
  mix_into(h, static_cast<std::uint8_t>(r.direction));
  mix_into(h, r.n_samples);
  mix_into(h, r.schedule.master_seed);
  mix_into(h, r.schedule.stream_index);
  return h;
}

}  // namespace

CrossingEstimate estimate_crossing(const CrossingRequest& request) {
  if (request.n_samples < 1) throw InvalidArgument("n_samples must be at least 1");
  if (!(request.p >= 0.0 && request.p <= 1.0)) throw InvalidArgument("density must lie in [0, 1]");
  const LatticeSpec spec = crossing_rectangle(request.kind, request.rows, request.aspect);
  const Tally tally = parallel_tally(request.n_samples, request.workers, [&](std::uint64_t i) {
    const auto seed = derive_seed(request.schedule.master_seed, request.schedule.stream_index + i);
    return has_crossing(sample_configuration(spec, request.p, seed), request.direction);
  });
  return CrossingEstimate::from_tally(tally, request_digest(request));
}

double exact_crossing_probability(const LatticeSpec& spec, double p, Direction direction) {
  const std::size_t n = spec.element_count();
  double total = 0.0;
  for (const Configuration& c : enumerate_configurations(spec)) {
    if (!has_crossing(c, direction)) continue;
    const std::size_t k = c.count_occupied();
    total += std::pow(p, static_cast<double>(k)) * std::pow(1.0 - p, static_cast<double>(n - k));
  }
  return total;
}

// ---- conformal crossing formula -------------------------------------------

namespace detail {

double cardy_series(double eta) {
  if (eta <= 0.0) return 0.0;
  static const double prefactor =
      std::tgamma(2.0 / 3.0) / (std::tgamma(1.0 / 3.0) * std::tgamma(4.0 / 3.0));
  double term = 1.0;
  double sum = 1.0;
  for (int n = 0; n < 100000; ++n) {
    term *= (1.0 / 3.0 + n) * (2.0 / 3.0 + n) / ((4.0 / 3.0 + n) * (n + 1.0)) * eta;
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return prefactor * std::cbrt(eta) * sum;
}

}  // namespace detail

namespace {

// Aspect 2K(k)/K(k') for modulus k in (0, 1).
// aspect as a function of the complementary modulus q, decreasing in q
double aspect_of_complement(double q) {
  const double k = std::sqrt((1.0 - q) * (1.0 + q));
  return 2.0 * std::comp_ellint_1(k) / std::comp_ellint_1(q);
}

// eta for aspect >= 1, where q is small and 1 - k = q^2 / (1 + k) keeps precision
double eta_wide(double aspect) {
  double lo = 0.0, hi = 1.0;
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (aspect_of_complement(mid) > aspect)
      lo = mid;
    else
      hi = mid;
  }
  const double q = 0.5 * (lo + hi);
  const double k = std::sqrt((1.0 - q) * (1.0 + q));
  const double r = q * q / ((1.0 + k) * (1.0 + k));
  return r * r;
}

}  // namespace

double cardy_eta(double aspect) {
  if (!(aspect > 0.0)) throw InvalidArgument("aspect must be positive");
  if (aspect >= 1.0) return eta_wide(aspect);
  return 1.0 - eta_wide(1.0 / aspect);
}

double cardy_formula(double eta) {
  if (eta <= 0.0) return 0.0;
  if (eta >= 1.0) return 1.0;
  if (eta == 0.5) return 0.5;  // fixed point of eta -> 1 - eta
  if (eta < 0.5) return detail::cardy_series(eta);
  return 1.0 - detail::cardy_series(1.0 - eta);
}

double cardy_crossing(double aspect) {
  if (!(aspect > 0.0)) throw InvalidArgument("aspect must be positive");
  if (aspect == 1.0) return 0.5;
  if (aspect > 1.0) return detail::cardy_series(eta_wide(aspect));
  return 1.0 - detail::cardy_series(eta_wide(1.0 / aspect));
}

// ---- near-critical family ---------------------------------------------------

ScalingFamily::Density ScalingFamily::density(double t, int n) const {
  if (n < 1) throw InvalidArgument("lattice size must be positive");
  if (!(nu > 0.0)) throw InvalidArgument("nu must be positive");
  const double shift = std::isinf(nu) ? 1.0 : std::pow(1.0 / n, 1.0 / nu);
  const double p = p_c + t * shift;
  const double clamped = std::clamp(p, 0.0, 1.0);
  return {clamped, clamped != p};
}

std::vector<RGPoint> rg_scan(const RGScanRequest& request) {
  if (request.family.t_grid.empty()) throw InvalidArgument("rg_scan needs a nonempty t grid");
  std::vector<double> ts = request.family.t_grid;
  std::sort(ts.begin(), ts.end());
  std::vector<RGPoint> points;
  points.reserve(ts.size());
  for (std::size_t j = 0; j < ts.size(); ++j) {
    const auto d = request.family.density(ts[j], request.n);
    RGPoint pt;
    pt.t = ts[j];
    pt.p = d.p;
    pt.clamped = d.clamped;
    CrossingRequest cr;
    cr.kind = request.kind;
    cr.p = d.p;
    cr.aspect = 1.0;
    cr.n_samples = request.n_samples;
    cr.workers = request.workers;
    cr.rows = request.n;
    cr.schedule = {request.master_seed, (2 * j) * kStreamBlock};
    pt.r1 = estimate_crossing(cr);
    cr.rows = 2 * request.n;
    cr.schedule = {request.master_seed, (2 * j + 1) * kStreamBlock};
    pt.r2 = estimate_crossing(cr);
    points.push_back(pt);
  }
  return points;
}

namespace {

struct FixedPoint {
  double t_star;
  double r_star;
  double slope;
  bool degenerate;
};

bool trivial(double r1, double r2) { return r1 == r2 && (r1 == 0.0 || r1 == 1.0); }

std::optional<FixedPoint> locate_fixed_point(const std::vector<double>& t,
                                             const std::vector<double>& r1,
                                             const std::vector<double>& r2, std::size_t k) {
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (!trivial(r1[i], r2[i])) cand.push_back(i);
  if (cand.empty()) return std::nullopt;

  FixedPoint fp{};
  const bool all_diagonal =
      std::all_of(cand.begin(), cand.end(), [&](std::size_t i) { return r1[i] == r2[i]; });
  bool found = false;
  if (all_diagonal) {
    const std::size_t mid = cand[cand.size() / 2];
    fp = {t[mid], r1[mid], 0.0, true};
    found = true;
  } else {
    for (std::size_t c = 0; c < cand.size() && !found; ++c) {
      const std::size_t i = cand[c];
      const double di = r2[i] - r1[i];
      if (di == 0.0) {
        fp = {t[i], r1[i], 0.0, false};
        found = true;
        break;
      }
      if (c + 1 == cand.size()) break;
      const std::size_t j = cand[c + 1];
      const double dj = r2[j] - r1[j];
      if ((di < 0.0) != (dj < 0.0) && dj != 0.0) {
        const double w = di / (di - dj);
        fp = {t[i] + w * (t[j] - t[i]), r1[i] + w * (r1[j] - r1[i]), 0.0, false};
        found = true;
      }
    }
  }
  if (!found) return std::nullopt;

  std::vector<std::size_t> order(t.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(t[a] - fp.t_star) < std::abs(t[b] - fp.t_star);
  });
  order.resize(std::min(k, order.size()));
  std::vector<double> x, y;
  for (std::size_t i : order) {
    x.push_back(r1[i]);
    y.push_back(r2[i]);
  }
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); })) return std::nullopt;
  fp.slope = fit_line(x, y).slope;
  return fp;
}

std::uint64_t binomial(SplitMix64& rng, std::uint64_t n, double p) {
  std::uint64_t s = 0;
  for (std::uint64_t i = 0; i < n; ++i) s += rng.uniform() < p ? 1 : 0;
  return s;
}

}  // namespace

FixedPointResult fixed_point_and_slope(const std::vector<RGPoint>& input, std::size_t k,
                                       std::size_t bootstrap, std::uint64_t bootstrap_seed) {
  if (input.size() < 5) throw InvalidArgument("fixed point search needs at least 5 points");
  std::vector<RGPoint> points = input;
  std::stable_sort(points.begin(), points.end(),
                   [](const RGPoint& a, const RGPoint& b) { return a.t < b.t; });
  std::vector<double> t, r1, r2;
  for (const auto& p : points) {
    t.push_back(p.t);
    r1.push_back(p.r1.p_hat);
    r2.push_back(p.r2.p_hat);
  }
  const auto fp = locate_fixed_point(t, r1, r2, k);
  if (!fp) throw Error("fixed point not bracketed");

  FixedPointResult out;
  out.t_star = fp->t_star;
  out.r_star = fp->r_star;
  out.slope = fp->slope;
  out.degenerate = fp->degenerate;
  out.slope_ci_low = out.slope_ci_high = fp->slope;

  const bool resamplable = std::all_of(points.begin(), points.end(), [](const RGPoint& p) {
    return p.r1.n_samples > 0 && p.r2.n_samples > 0;
  });
  if (!resamplable || bootstrap == 0) return out;

  SplitMix64 rng(bootstrap_seed);
  std::vector<double> slopes;
  slopes.reserve(bootstrap);
  std::vector<double> b1(points.size()), b2(points.size());
  for (std::size_t rep = 0; rep < bootstrap; ++rep) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& p = points[i];
      b1[i] = static_cast<double>(binomial(rng, p.r1.n_samples, p.r1.p_hat)) /
              static_cast<double>(p.r1.n_samples);
      b2[i] = static_cast<double>(binomial(rng, p.r2.n_samples, p.r2.p_hat)) /
              static_cast<double>(p.r2.n_samples);
    }
    if (const auto bfp = locate_fixed_point(t, b1, b2, k)) slopes.push_back(bfp->slope);
  }
  out.bootstrap_replicates = slopes.size();
  if (!slopes.empty()) {
    out.slope_ci_low = quantile(slopes, 0.025);
    out.slope_ci_high = quantile(slopes, 0.975);
  }
  return out;
}

CollapseTable scaling_collapse(const CollapseRequest& request) {
  const auto& fam = request.family;
  if (fam.sizes.empty() || fam.t_grid.empty())
    throw InvalidArgument("collapse needs at least one size and one t value");
  CollapseTable table;
  table.t_grid = fam.t_grid;
  std::sort(table.t_grid.begin(), table.t_grid.end());
  table.sizes = fam.sizes;
  const auto nt = table.t_grid.size();
  const auto ns = table.sizes.size();
  table.r1 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(ns));
  table.estimates.assign(nt, std::vector<CrossingEstimate>(ns));
  table.clamped.assign(nt, std::vector<bool>(ns, false));
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t j = 0; j < ns; ++j) {
      const auto d = fam.density(table.t_grid[i], table.sizes[j]);
      CrossingRequest cr;
      cr.kind = request.kind;
      cr.rows = table.sizes[j];
      cr.p = d.p;
      cr.aspect = 1.0;
      cr.n_samples = request.n_samples;
      cr.workers = request.workers;
      cr.schedule = {request.master_seed, (i * ns + j) * kStreamBlock};
      table.estimates[i][j] = estimate_crossing(cr);
      table.clamped[i][j] = d.clamped;
      table.r1(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = table.estimates[i][j].p_hat;
    }
  }
  const Eigen::VectorXd range = table.r1.rowwise().maxCoeff() - table.r1.rowwise().minCoeff();
  table.spread = range.maxCoeff();
  return table;
}

namespace {

struct SiteWindow {
  int x0, x1, y0, y1;  // inclusive
  bool empty() const { return x1 < x0 || y1 < y0; }
};

SiteWindow window_of(const LatticeSpec& spec, const Rect& r) {
  const double d = spec.spacing_denominator();
  SiteWindow w{static_cast<int>(std::ceil(r.x0 * d - 0.5)), static_cast<int>(std::floor(r.x1 * d - 0.5)),
               static_cast<int>(std::ceil(r.y0 * d - 0.5)), static_cast<int>(std::floor(r.y1 * d - 0.5))};
  w.x0 = std::max(w.x0, 0);
  w.y0 = std::max(w.y0, 0);
  w.x1 = std::min(w.x1, spec.cols() - 1);
  w.y1 = std::min(w.y1, spec.rows() - 1);
  return w;
}

void check_rect(const Rect& r) {
  const bool inside = r.x0 >= 0.0 && r.y0 >= 0.0 && r.x1 <= 1.0 && r.y1 <= 1.0;
  if (!inside || !(r.x0 < r.x1) || !(r.y0 < r.y1))
    throw InvalidArgument("rectangle must be nonempty and inside the unit square");
}

}  // namespace

Configuration restrict_to(const Configuration& config, const Rect& rect) {
  const LatticeSpec& spec = config.spec();
  const SiteWindow w = window_of(spec, rect);
  if (w.empty()) throw InvalidArgument("rectangle contains no lattice sites");
  const LatticeSpec sub(spec.kind(), w.x1 - w.x0 + 1, w.y1 - w.y0 + 1);
  Configuration out(sub, config.seed(), config.density());
  for (int y = 0; y < sub.rows(); ++y) {
    for (int x = 0; x < sub.cols(); ++x) {
      const int gx = w.x0 + x, gy = w.y0 + y;
      if (spec.kind() == LatticeKind::site) {
        out.set(sub.site_index(x, y), config.occupied(spec.site_index(gx, gy)));
        continue;
      }
      if (x + 1 < sub.cols()) out.set(sub.east_bond(x, y), config.east_open(gx, gy));
      if (y + 1 < sub.rows()) out.set(sub.north_bond(x, y), config.north_open(gx, gy));
    }
  }
  return out;
}

namespace {

struct PairTally {
  std::uint64_t n = 0, a = 0, b = 0, ab = 0;
};

}  // namespace

IndependenceReport independence_test(const IndependenceRequest& req) {
  check_rect(req.a);
  check_rect(req.b);
  const double gap_x = std::max(req.a.x0 - req.b.x1, req.b.x0 - req.a.x1);
  const double gap_y = std::max(req.a.y0 - req.b.y1, req.b.y0 - req.a.y1);
  if (gap_x <= 0.0 && gap_y <= 0.0)
    throw InvalidArgument("independence test needs disjoint rectangles with a positive gap");
  if (req.n_samples < 1) throw InvalidArgument("n_samples must be at least 1");
  const LatticeSpec spec(req.kind, req.n, req.n);
  // Fail early on windows without sites.
  if (window_of(spec, req.a).empty() || window_of(spec, req.b).empty())
    throw InvalidArgument("rectangle contains no lattice sites");

  const PairTally t = parallel_reduce(
      req.n_samples, req.workers, PairTally{},
      [&](std::uint64_t i, PairTally& acc) {
        const Configuration c = sample_configuration(spec, req.p, derive_seed(req.master_seed, i));
        const bool ca = has_crossing(restrict_to(c, req.a), Direction::left_right);
        const bool cb = has_crossing(restrict_to(c, req.b), Direction::left_right);
        ++acc.n;
        acc.a += ca;
        acc.b += cb;
        acc.ab += ca && cb;
      },
      [](PairTally& into, const PairTally& from) {
        into.n += from.n;
        into.a += from.a;
        into.b += from.b;
        into.ab += from.ab;
      });

  IndependenceReport r;
  r.n_samples = t.n;
  r.count_a = t.a;
  r.count_b = t.b;
  r.count_both = t.ab;
  const double n = static_cast<double>(t.n);
  r.p_a = static_cast<double>(t.a) / n;
  r.p_b = static_cast<double>(t.b) / n;
  r.p_both = static_cast<double>(t.ab) / n;
  r.covariance = r.p_both - r.p_a * r.p_b;
  // Var of the mean of (X - pa)(Y - pb), from the 2x2 cell frequencies.
  const double f11 = static_cast<double>(t.ab) / n;
  const double f10 = static_cast<double>(t.a - t.ab) / n;
  const double f01 = static_cast<double>(t.b - t.ab) / n;
  const double f00 = 1.0 - f11 - f10 - f01;
  auto sq = [](double v) { return v * v; };
  const double m2 = f11 * sq((1 - r.p_a) * (1 - r.p_b)) + f10 * sq((1 - r.p_a) * r.p_b) +
                    f01 * sq(r.p_a * (1 - r.p_b)) + f00 * sq(r.p_a * r.p_b);
  r.covariance_sigma = std::sqrt(std::max(0.0, m2 - r.covariance * r.covariance) / n);
  r.separation = std::hypot(std::max(gap_x, 0.0), std::max(gap_y, 0.0));
  return r;
}

double effective_site_pc(int n, std::uint64_t n_samples, std::uint64_t master_seed, int workers,
                         double tolerance) {
  CrossingRequest cr;
  cr.kind = LatticeKind::site;
  cr.rows = n;
  cr.aspect = 1.0;
  cr.n_samples = n_samples;
  cr.workers = workers;
  cr.schedule = {master_seed, 0};
  double lo = 0.0, hi = 1.0;
  while (hi - lo > tolerance) {
    cr.p = 0.5 * (lo + hi);
    const auto e = estimate_crossing(cr);
    if (2 * e.successes >= e.n_samples)
      hi = cr.p;
    else
      lo = cr.p;
  }
  return 0.5 * (lo + hi);
}

}  // namespace percweb
