// Acceptance checks. Prints one PASS/FAIL line per criterion.
//   acceptance            run all ten
//   acceptance -c 5       run criterion 5 only

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "../oracle/oracle.hpp"
#include "../unit/helpers.hpp"
#include "percweb/clusters.hpp"
#include "percweb/core.hpp"
#include "percweb/droplet.hpp"
#include "percweb/harness.hpp"
#include "percweb/rng.hpp"
#include "percweb/scaling.hpp"
#include "percweb/web.hpp"

using namespace percweb;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(lo + (hi - lo) * i / (count - 1));
  return out;
}

Outcome duality() {
  const auto start = Clock::now();
  std::uint64_t failures = 0, checked = 0;
  for (const auto& c : enumerate_configurations(LatticeSpec(LatticeKind::bond, 3, 2))) {
    failures += duality_xor_check(c) ? 0 : 1;
    ++checked;
  }
  const LatticeSpec spec = crossing_rectangle(LatticeKind::bond, 64, 1.0);
  SplitMix64 rng(derive_seed(1, 0));
  for (std::uint64_t i = 0; i < 100000; ++i) {
    const double p = i % 2 == 0 ? 0.5 : 0.2 + 0.6 * rng.uniform();
    failures += duality_xor_check(sample_configuration(spec, p, derive_seed(1, i + 1))) ? 0 : 1;
    ++checked;
  }
  const double secs = seconds_since(start);
  std::ostringstream d;
  d << failures << " failures in " << checked << " configurations, " << secs << " s";
  return {failures == 0 && secs < 60.0, d.str()};
}

Outcome self_dual_value() {
  const double exact =
      exact_crossing_probability(LatticeSpec(LatticeKind::bond, 3, 2), 0.5, Direction::left_right);
  CrossingRequest req;
  req.kind = LatticeKind::bond;
  req.rows = 64;
  req.p = 0.5;
  req.n_samples = 10000;
  req.schedule = {2, 0};
  const auto est = estimate_crossing(req);
  std::ostringstream d;
  d.precision(17);
  d << "exact " << exact << "; n=64 p_hat " << est.p_hat << " Wilson [" << est.ci_low << ", "
    << est.ci_high << "]";
  return {exact == 0.5 && est.ci_low <= 0.5 && 0.5 <= est.ci_high, d.str()};
}

Outcome oracle_equivalence() {
  std::uint64_t label_bad = 0, label_total = 0;
  SplitMix64 rng(derive_seed(3, 0));
  for (int i = 0; i < 1000; ++i) {
    const int size = std::vector<int>{4, 16, 64}[i % 3];
    const LatticeKind kind = (i / 3) % 2 == 0 ? LatticeKind::bond : LatticeKind::site;
    const double p = rng.uniform();
    const auto c = sample_configuration(LatticeSpec(kind, size, size), p, derive_seed(3, i + 1));
    label_bad += label_clusters(c).labels() == oracle::bfs_labels(c) ? 0 : 1;
    ++label_total;
  }
  std::uint64_t cover_bad = 0, cover_total = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t steps = 1 + i % 24;  // 2 to 25 vertices
    const Curve curve = testing_support::random_walk_curve(steps, derive_seed(4, i), 0.01);
    const auto& v = curve.vertices();
    // every pairwise distance is a threshold; test at, just below, and between them
    std::vector<double> cuts;
    for (std::size_t a = 0; a < v.size(); ++a)
      for (std::size_t b = a + 1; b < v.size(); ++b) cuts.push_back((v[a] - v[b]).norm());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double x, double y) { return std::abs(x - y) < 1e-12; }),
               cuts.end());
    std::vector<double> scales;
    for (std::size_t k = 0; k < cuts.size(); ++k) {
      scales.push_back(cuts[k]);
      scales.push_back(cuts[k] * (1 - 1e-6));
      if (k + 1 < cuts.size()) scales.push_back(0.5 * (cuts[k] + cuts[k + 1]));
    }
    for (double s : scales) {
      cover_bad += covering_count(curve, s) == oracle::min_cover_dp(curve, s) ? 0 : 1;
      ++cover_total;
    }
  }
  std::ostringstream d;
  d << "labels " << label_bad << "/" << label_total << " mismatched; covers " << cover_bad << "/"
    << cover_total << " mismatched over 1000 curves";
  return {label_bad == 0 && cover_bad == 0, d.str()};
}

Outcome cardy_identities() {
  // F at aspect 2, frozen from the quadrature oracle at high precision
  const double golden = 0.17564689380065523913;
  bool ok = cardy_formula(0.5) == 0.5;
  double worst = 0.0;
  bool increasing = true;
  double previous = 0.0;
  for (int k = 1; k <= 99; ++k) {
    const double eta = k / 100.0;
    worst = std::max(worst, std::abs(cardy_formula(eta) + cardy_formula(1.0 - eta) - 1.0));
    const double f = cardy_formula(eta);
    increasing = increasing && f > previous;
    previous = f;
  }
  const double at2 = cardy_crossing(2.0);
  const double quad = oracle::cardy_quadrature(cardy_eta(2.0));
  ok = ok && worst <= 1e-10 && increasing && std::abs(at2 - golden) <= 1e-10 &&
       std::abs(quad - golden) <= 1e-10;
  std::ostringstream d;
  d.precision(17);
  d << "F(1/2) = " << cardy_formula(0.5) << "; max |F(e)+F(1-e)-1| = " << worst
    << "; increasing " << (increasing ? "yes" : "no") << "; aspect 2: " << at2 << " vs frozen "
    << golden << " (quadrature " << quad << ")";
  return {ok, d.str()};
}

Outcome cardy_vs_mc() {
  std::ostringstream d;
  bool ok = false;
  for (int n : {256, 512}) {
    const auto start = Clock::now();
    double worst = 0.0;
    d << "n=" << n << ":";
    for (double aspect : {0.5, 1.0, 1.5, 2.0}) {
      CrossingRequest req;
      req.kind = LatticeKind::bond;
      req.rows = n;
      req.p = 0.5;
      req.aspect = aspect;
      req.n_samples = 10000;
      req.schedule = {5, static_cast<std::uint64_t>(aspect * 10)};
      const auto est = estimate_crossing(req);
      const double diff = std::abs(est.p_hat - cardy_crossing(aspect));
      worst = std::max(worst, diff);
      d << " [" << aspect << ": " << est.p_hat << " vs " << cardy_crossing(aspect) << "]";
    }
    d << " max diff " << worst << ", " << seconds_since(start) << " s; ";
    if (worst <= 0.03) {
      ok = true;
      break;
    }
  }
  return {ok, d.str()};
}

Outcome web_regularity() {
  const auto start = Clock::now();
  WebSampleRequest req;
  req.kind = LatticeKind::bond;
  req.p = 0.5;
  req.n = 256;
  req.n_curves = 500;
  req.master_seed = 6;
  const auto big = collect_web_sample(req);
  std::size_t inside = 0;
  double lo = 3.0, hi = 0.0;
  for (double e : big.exponents) {
    inside += (e > 1.0 && e < 2.0) ? 1 : 0;
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  const bool exponents_ok = big.exponents.size() == 500 && big.fit_failures == 0 && inside == 500;

  std::vector<KappaSample> pooled;
  for (int n : {64, 128}) {
    req.n = n;
    req.stream_index = static_cast<std::uint64_t>(n);
    const auto s = collect_web_sample(req);
    pooled.insert(pooled.end(), s.kappas.begin(), s.kappas.end());
  }
  const auto grid = matched_u_grid(pooled, 20);
  const auto tails = kappa_tail_report(pooled, grid);
  std::ostringstream d;
  d << inside << "/" << big.exponents.size() << " exponents in (1,2) (range " << lo << " to " << hi
    << ", fit failures " << big.fit_failures << "); kappa tail spread 1/64 vs 1/128 "
    << tails.spread << "; " << seconds_since(start) << " s";
  return {exponents_ok && tails.spread <= 0.1, d.str()};
}

Outcome rg_map() {
  RGScanRequest req;
  req.kind = LatticeKind::bond;
  req.n = 128;
  req.family.p_c = 0.5;
  req.family.nu = 4.0 / 3.0;
  req.family.t_grid = linspace(-2.0, 2.0, 11);
  req.n_samples = 4000;
  req.master_seed = 7;
  const auto points = rg_scan(req);
  std::ostringstream d;
  try {
    const auto fp = fixed_point_and_slope(points, 5, 1000);
    d << "R* " << fp.r_star << " at t " << fp.t_star << "; slope " << fp.slope << " CI ["
      << fp.slope_ci_low << ", " << fp.slope_ci_high << "] (reference 4/3)";
    return {fp.r_star >= 0.2 && fp.r_star <= 0.8 && fp.slope > 1.0 && fp.slope_ci_low > 1.0 &&
                !fp.degenerate,
            d.str()};
  } catch (const Error& e) {
    return {false, e.what()};
  }
}

Outcome collapse() {
  CollapseRequest req;
  req.kind = LatticeKind::bond;
  req.family.p_c = 0.5;
  req.family.nu = 4.0 / 3.0;
  req.family.t_grid = linspace(-2.0, 2.0, 11);
  req.family.sizes = {64, 128, 256};
  req.n_samples = 10000;
  req.master_seed = 8;
  const auto table = scaling_collapse(req);
  std::ostringstream d;
  d << "sup-norm spread " << table.spread << " over 11 t values, sizes 64/128/256";
  return {table.spread <= 0.05, d.str()};
}

Outcome rotation() {
  const double radius = 0.02;
  const double lambda = critical_intensity(radius, 2000, 9, 1);
  RotationRequest req;
  req.lambda = lambda;
  req.radius = radius;
  req.length = 0.6;
  req.width = 0.6;
  req.angles_deg = {0, 15, 30, 45};
  req.n_samples = 10000;
  req.master_seed = 9;
  const auto rep = rotation_invariance_report(req);
  std::ostringstream d;
  d << "lambda " << lambda << ";";
  for (std::size_t i = 0; i < rep.estimates.size(); ++i)
    d << " " << req.angles_deg[i] << "deg " << rep.estimates[i].p_hat;
  d << "; max pairwise z " << rep.max_pairwise_z;
  return {rep.max_pairwise_z <= 3.0, d.str()};
}

Outcome determinism_and_speed() {
  std::vector<Json> configs = {
      {{"experiment", "crossing"}, {"sizes", {32, 48}}, {"aspects", {1, 2}}, {"n_samples", 3000}},
      {{"experiment", "web_stats"}, {"sizes", {16, 32}}, {"n_samples", 40}},
      {{"experiment", "rg_map"}, {"n", 16}, {"n_samples", 500}, {"bootstrap", 100}},
      {{"experiment", "droplet_rotation"}, {"radius", 0.1}, {"calibration_samples", 200}, {"n_samples", 500}},
  };
  bool identical = true;
  for (const auto& j : configs) {
    std::string first;
    for (int w : {1, 2, 8}) {
      Json copy = j;
      copy["workers"] = w;
      const auto rec = run(parse_config(copy));
      const std::string block = rec.results.dump();
      if (w == 1)
        first = block;
      else
        identical = identical && block == first;
    }
  }
  const LatticeSpec spec(LatticeKind::site, 2048, 2048);
  const auto c = sample_configuration(spec, 0.5927, derive_seed(10, 0));
  double worst = 0.0;
  std::size_t clusters = 0;
  for (int rep = 0; rep < 3; ++rep) {
    const auto start = Clock::now();
    const auto lab = label_clusters(c);
    worst = std::max(worst, seconds_since(start));
    clusters = lab.cluster_count();
  }
  std::ostringstream d;
  d << "result blocks for workers 1/2/8 " << (identical ? "identical" : "DIFFER")
    << "; 2048x2048 site labeling slowest of 3 runs " << worst << " s (" << clusters
    << " clusters)";
  return {identical && worst < 1.0, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  app.add_option("-c,--criterion", only, "run one criterion (1-10)")->check(CLI::Range(0, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome()>> checks = {
      duality,     self_dual_value, oracle_equivalence, cardy_identities, cardy_vs_mc,
      web_regularity, rg_map,        collapse,           rotation,         determinism_and_speed};
  int failed = 0;
  for (int k = 1; k <= 10; ++k) {
    if (only != 0 && only != k) continue;
    Outcome o;
    try {
      o = checks[k - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << k << ": " << o.detail << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
