#include "percweb/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "percweb/clusters.hpp"
#include "percweb/core.hpp"
#include "percweb/droplet.hpp"
#include "percweb/parallel.hpp"
#include "percweb/scaling.hpp"
#include "percweb/stats.hpp"
#include "percweb/web.hpp"

namespace percweb {

namespace {

constexpr const char* kExperimentNames[] = {"crossing",   "cardy_compare", "rg_map",
                                            "collapse",   "web_stats",     "duality_audit",
                                            "droplet_rotation", "independence"};

// ---- schema -------------------------------------------------------------------

enum class FieldType {
  count,         // integer >= 1
  seed,          // integer >= 0
  size,          // integer >= 2
  number,
  positive,      // number > 0
  probability,   // number in [0, 1]
  probability_or_null,
  positive_or_null,
  kind,          // "bond" | "site"
  direction,     // "left_right" | "top_bottom"
  string,
  numbers,       // non-empty list of numbers
  positive_numbers,
  sizes,         // non-empty list of integers >= 2
  rect,          // [x0, y0, x1, y1] inside the unit square with x0 < x1, y0 < y1
  boolean,
};

struct Field {
  const char* name;
  FieldType type;
  Json fallback;
};

std::vector<double> linspace(double a, double b, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(a + (b - a) * i / (count - 1));
  return out;
}

const std::vector<Field>& schema(Experiment e) {
  static const std::map<Experiment, std::vector<Field>> table = [] {
    std::map<Experiment, std::vector<Field>> t;
    const Json t_grid = linspace(-2.0, 2.0, 11);
    t[Experiment::crossing] = {{"kind", FieldType::kind, "bond"},
                               {"sizes", FieldType::sizes, {64}},
                               {"p", FieldType::probability_or_null, nullptr},
                               {"aspects", FieldType::positive_numbers, {1.0}},
                               {"direction", FieldType::direction, "left_right"},
                               {"pc_samples", FieldType::count, 2000},
                               {"n_samples", FieldType::count, 1000}};
    t[Experiment::cardy_compare] = {{"kind", FieldType::kind, "bond"},
                                    {"n", FieldType::size, 256},
                                    {"p", FieldType::probability_or_null, nullptr},
                                    {"aspects", FieldType::positive_numbers, {0.5, 1.0, 1.5, 2.0}},
                                    {"pc_samples", FieldType::count, 2000},
                                    {"n_samples", FieldType::count, 10000}};
    t[Experiment::rg_map] = {{"kind", FieldType::kind, "bond"},
                             {"n", FieldType::size, 128},
                             {"p_c", FieldType::probability_or_null, nullptr},
                             {"nu", FieldType::positive_or_null, 4.0 / 3.0},
                             {"t_grid", FieldType::numbers, t_grid},
                             {"fit_points", FieldType::count, 5},
                             {"bootstrap", FieldType::count, 1000},
                             {"pc_samples", FieldType::count, 2000},
                             {"n_samples", FieldType::count, 4000}};
    t[Experiment::collapse] = {{"kind", FieldType::kind, "bond"},
                               {"sizes", FieldType::sizes, {64, 128, 256}},
                               {"p_c", FieldType::probability_or_null, nullptr},
                               {"nu", FieldType::positive_or_null, 4.0 / 3.0},
                               {"t_grid", FieldType::numbers, t_grid},
                               {"pc_samples", FieldType::count, 2000},
                               {"n_samples", FieldType::count, 10000}};
    t[Experiment::web_stats] = {{"kind", FieldType::kind, "bond"},
                                {"sizes", FieldType::sizes, {64, 128}},
                                {"p", FieldType::probability_or_null, nullptr},
                                {"alpha", FieldType::positive, 0.6},
                                {"u_points", FieldType::count, 20},
                                {"pc_samples", FieldType::count, 2000},
                                {"n_samples", FieldType::count, 500}};
    t[Experiment::duality_audit] = {{"cols", FieldType::size, 3},
                                    {"rows", FieldType::size, 2},
                                    {"sizes", FieldType::sizes, {64}},
                                    {"p", FieldType::probability, 0.5},
                                    {"n_samples", FieldType::count, 100000}};
    t[Experiment::droplet_rotation] = {{"radius", FieldType::positive, 0.02},
                                       {"length", FieldType::positive, 0.6},
                                       {"width", FieldType::positive, 0.6},
                                       {"angles", FieldType::numbers, {0.0, 15.0, 30.0, 45.0}},
                                       {"lambda", FieldType::positive_or_null, nullptr},
                                       {"calibration_samples", FieldType::count, 2000},
                                       {"n_samples", FieldType::count, 10000}};
    t[Experiment::independence] = {{"kind", FieldType::kind, "bond"},
                                   {"n", FieldType::size, 128},
                                   {"p", FieldType::probability_or_null, nullptr},
                                   {"rect_a", FieldType::rect, {0.05, 0.3, 0.45, 0.7}},
                                   {"rect_b", FieldType::rect, {0.55, 0.3, 0.95, 0.7}},
                                   {"pc_samples", FieldType::count, 2000},
                                   {"n_samples", FieldType::count, 10000}};
    for (auto& [exp, fields] : t) {
      fields.push_back({"master_seed", FieldType::seed, 0});
      fields.push_back({"workers", FieldType::count, 1});
      fields.push_back({"output", FieldType::string, ""});
    }
    return t;
  }();
  return table.at(e);
}

std::string check_field(const Field& f, const Json& v) {
  const std::string name = std::string("'") + f.name + "'";
  auto is_int = [](const Json& x) { return x.is_number_integer(); };
  switch (f.type) {
    case FieldType::count:
      if (!is_int(v) || (v.is_number_unsigned() ? v.get<std::uint64_t>() < 1 : v.get<std::int64_t>() < 1))
        return name + " must be an integer >= 1";
      return {};
    case FieldType::seed:
      if (!is_int(v) || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        return name + " must be a nonnegative integer";
      return {};
    case FieldType::size:
      if (!is_int(v) || v.get<std::int64_t>() < 2 || v.get<std::int64_t>() > 65536)
        return name + " must be an integer in [2, 65536]";
      return {};
    case FieldType::number:
      if (!v.is_number()) return name + " must be a number";
      return {};
    case FieldType::positive:
      if (!v.is_number() || !(v.get<double>() > 0)) return name + " must be a positive number";
      return {};
    case FieldType::probability_or_null:
      if (v.is_null()) return {};
      [[fallthrough]];
    case FieldType::probability:
      if (!v.is_number() || !(v.get<double>() >= 0 && v.get<double>() <= 1))
        return name + " must be a number in [0, 1]";
      return {};
    case FieldType::positive_or_null:
      if (v.is_null()) return {};
      if (!v.is_number() || !(v.get<double>() > 0)) return name + " must be a positive number or null";
      return {};
    case FieldType::kind:
      if (!v.is_string() || (v != "bond" && v != "site")) return name + " must be \"bond\" or \"site\"";
      return {};
    case FieldType::direction:
      if (!v.is_string() || (v != "left_right" && v != "top_bottom"))
        return name + " must be \"left_right\" or \"top_bottom\"";
      return {};
    case FieldType::string:
      if (!v.is_string()) return name + " must be a string";
      return {};
    case FieldType::numbers:
    case FieldType::positive_numbers:
      if (!v.is_array() || v.empty()) return name + " must be a non-empty list of numbers";
      for (const auto& x : v) {
        if (!x.is_number()) return name + " must be a non-empty list of numbers";
        if (f.type == FieldType::positive_numbers && !(x.get<double>() > 0))
          return name + " entries must be positive";
      }
      return {};
    case FieldType::sizes:
      if (!v.is_array() || v.empty()) return name + " must be a non-empty list of integers >= 2";
      for (const auto& x : v)
        if (!is_int(x) || x.get<std::int64_t>() < 2 || x.get<std::int64_t>() > 65536)
          return name + " must be a non-empty list of integers in [2, 65536]";
      return {};
    case FieldType::rect: {
      if (!v.is_array() || v.size() != 4) return name + " must be [x0, y0, x1, y1]";
      for (const auto& x : v)
        if (!x.is_number()) return name + " must be [x0, y0, x1, y1]";
      const double x0 = v[0], y0 = v[1], x1 = v[2], y1 = v[3];
      if (!(0 <= x0 && x0 < x1 && x1 <= 1 && 0 <= y0 && y0 < y1 && y1 <= 1))
        return name + " must satisfy 0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1";
      return {};
    }
    case FieldType::boolean:
      if (!v.is_boolean()) return name + " must be true or false";
      return {};
  }
  return {};
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string digest_of(const Json& j) {
  const std::string text = j.dump();
  return hex64(fnv1a(text.data(), text.size()));
}

// ---- experiment helpers ---------------------------------------------------------

// Each estimate of a run takes the next block of seed streams.
class StreamBlocks {
 public:
  explicit StreamBlocks(std::uint64_t master) : master_(master) {}
  SeedSchedule next() { return {master_, kStreamBlock * index_++}; }
  std::uint64_t master() const { return master_; }

 private:
  std::uint64_t master_;
  std::uint64_t index_ = 0;
};

// Critical-point calibrations draw from their own master seed.
std::uint64_t calibration_seed(std::uint64_t master) { return mix64(master ^ 0x70635f6361ULL); }

Json estimate_json(const CrossingEstimate& e) {
  return {{"p_hat", e.p_hat},   {"successes", e.successes}, {"n_samples", e.n_samples},
          {"ci_low", e.ci_low}, {"ci_high", e.ci_high},     {"config_digest", hex64(e.config_digest)}};
}

LatticeKind kind_of(const Json& params) {
  return lattice_kind_from_string(params.at("kind").get<std::string>().c_str());
}

// Density at criticality for the given linear size: 1/2 for bond, a stored
// bisection estimate for site.
double critical_density(const ExperimentConfig& cfg, LatticeKind kind, int n, Json& results) {
  if (kind == LatticeKind::bond) return 0.5;
  const double pc = effective_site_pc(n, cfg.params.at("pc_samples").get<std::uint64_t>(),
                                      calibration_seed(cfg.master_seed), cfg.workers);
  results["p_c"][std::to_string(n)] = pc;
  return pc;
}

double density_param(const ExperimentConfig& cfg, const char* key, LatticeKind kind, int n,
                     Json& results) {
  const Json& v = cfg.params.at(key);
  if (!v.is_null()) return v.get<double>();
  return critical_density(cfg, kind, n, results);
}

double nu_of(const Json& params) {
  const Json& v = params.at("nu");
  return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
}

Rect rect_of(const Json& v) { return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()}; }

void run_crossing(const ExperimentConfig& cfg, Json& results) {
  const auto kind = kind_of(cfg.params);
  const auto direction = direction_from_string(cfg.params.at("direction").get<std::string>().c_str());
  StreamBlocks blocks(cfg.master_seed);
  results["points"] = Json::array();
  for (int n : cfg.params.at("sizes").get<std::vector<int>>()) {
    const double p = density_param(cfg, "p", kind, n, results);
    for (double aspect : cfg.params.at("aspects").get<std::vector<double>>()) {
      if (interrupted()) return;
      CrossingRequest req{kind, n, p, aspect, direction, cfg.n_samples, blocks.next(), cfg.workers};
      const auto spec = crossing_rectangle(kind, n, aspect);
      Json point = estimate_json(estimate_crossing(req));
      point["n"] = n;
      point["delta"] = spec.spacing();
      point["aspect"] = aspect;
      point["p"] = p;
      results["points"].push_back(point);
    }
  }
}

void run_cardy_compare(const ExperimentConfig& cfg, Json& results) {
  const auto kind = kind_of(cfg.params);
  const int n = cfg.params.at("n");
  const double p = density_param(cfg, "p", kind, n, results);
  StreamBlocks blocks(cfg.master_seed);
  results["points"] = Json::array();
  double worst = 0.0;
  for (double aspect : cfg.params.at("aspects").get<std::vector<double>>()) {
    if (interrupted()) return;
    CrossingRequest req{kind, n, p, aspect, Direction::left_right, cfg.n_samples, blocks.next(),
                        cfg.workers};
    const auto est = estimate_crossing(req);
    Json point = estimate_json(est);
    point["n"] = n;
    point["delta"] = crossing_rectangle(kind, n, aspect).spacing();
    point["aspect"] = aspect;
    point["p"] = p;
    point["cardy"] = cardy_crossing(aspect);
    point["abs_diff"] = std::abs(est.p_hat - cardy_crossing(aspect));
    worst = std::max(worst, point["abs_diff"].get<double>());
    results["points"].push_back(point);
  }
  results["max_abs_diff"] = worst;
}

ScalingFamily family_of(const ExperimentConfig& cfg, LatticeKind kind, std::vector<int> sizes,
                        Json& results) {
  ScalingFamily fam;
  fam.nu = nu_of(cfg.params);
  fam.t_grid = cfg.params.at("t_grid").get<std::vector<double>>();
  std::sort(fam.t_grid.begin(), fam.t_grid.end());
  fam.sizes = sizes;
  const Json& pc = cfg.params.at("p_c");
  fam.p_c = pc.is_null() ? critical_density(cfg, kind, *std::max_element(sizes.begin(), sizes.end()), results)
                         : pc.get<double>();
  results["family"] = {{"p_c", fam.p_c}, {"nu", cfg.params.at("nu")}, {"t_grid", fam.t_grid}};
  return fam;
}

void run_rg_map(const ExperimentConfig& cfg, Json& results) {
  const auto kind = kind_of(cfg.params);
  const int n = cfg.params.at("n");
  RGScanRequest req;
  req.kind = kind;
  req.n = n;
  req.family = family_of(cfg, kind, {n}, results);
  req.n_samples = cfg.n_samples;
  req.master_seed = cfg.master_seed;
  req.workers = cfg.workers;
  const auto points = rg_scan(req);
  results["delta"] = 1.0 / n;
  results["points"] = Json::array();
  for (const auto& pt : points)
    results["points"].push_back({{"t", pt.t},
                                 {"p", pt.p},
                                 {"clamped", pt.clamped},
                                 {"r1", estimate_json(pt.r1)},
                                 {"r2", estimate_json(pt.r2)}});
  if (interrupted()) return;
  try {
    const auto fp = fixed_point_and_slope(points, cfg.params.at("fit_points").get<std::size_t>(),
                                          cfg.params.at("bootstrap").get<std::size_t>(),
                                          derive_seed(cfg.master_seed, 0x626f6f74ULL));
    results["fixed_point"] = {{"bracketed", true},
                              {"t_star", fp.t_star},
                              {"r_star", fp.r_star},
                              {"slope", fp.slope},
                              {"slope_ci_low", fp.slope_ci_low},
                              {"slope_ci_high", fp.slope_ci_high},
                              {"degenerate", fp.degenerate},
                              {"bootstrap_replicates", fp.bootstrap_replicates},
                              {"reference_slope", 4.0 / 3.0}};
  } catch (const InvalidArgument& e) {
    results["fixed_point"] = {{"bracketed", false}, {"reason", e.what()}};
  } catch (const Error& e) {
    results["fixed_point"] = {{"bracketed", false}, {"reason", e.what()}};
  }
}

void run_collapse(const ExperimentConfig& cfg, Json& results) {
  const auto kind = kind_of(cfg.params);
  CollapseRequest req;
  req.kind = kind;
  req.family = family_of(cfg, kind, cfg.params.at("sizes").get<std::vector<int>>(), results);
  req.n_samples = cfg.n_samples;
  req.master_seed = cfg.master_seed;
  req.workers = cfg.workers;
  const auto table = scaling_collapse(req);
  results["sizes"] = table.sizes;
  results["t_grid"] = table.t_grid;
  results["cells"] = Json::array();
  for (std::size_t i = 0; i < table.t_grid.size(); ++i)
    for (std::size_t j = 0; j < table.sizes.size(); ++j) {
      Json cell = estimate_json(table.estimates[i][j]);
      cell["t"] = table.t_grid[i];
      cell["n"] = table.sizes[j];
      cell["delta"] = 1.0 / table.sizes[j];
      cell["clamped"] = static_cast<bool>(table.clamped[i][j]);
      results["cells"].push_back(cell);
    }
  results["spread"] = table.spread;
}

void run_web_stats(const ExperimentConfig& cfg, Json& results) {
  const auto kind = kind_of(cfg.params);
  const double alpha = cfg.params.at("alpha");
  std::vector<KappaSample> pooled;
  results["sizes"] = Json::array();
  std::uint64_t stream = 0;
  for (int n : cfg.params.at("sizes").get<std::vector<int>>()) {
    if (interrupted()) return;
    WebSampleRequest req;
    req.kind = kind;
    req.n = n;
    req.p = density_param(cfg, "p", kind, n, results);
    req.n_curves = cfg.n_samples;
    req.alpha = alpha;
    req.master_seed = cfg.master_seed;
    req.stream_index = kStreamBlock * stream++;
    req.workers = cfg.workers;
    const auto ws = collect_web_sample(req);
    Json entry;
    entry["n"] = n;
    entry["delta"] = ws.delta;
    entry["p"] = req.p;
    entry["scales"] = ws.scales;
    entry["curves"] = ws.kappas.size();
    entry["configurations_tried"] = ws.configurations_tried;
    entry["fit_failures"] = ws.fit_failures;
    entry["vertex_counts"] = ws.vertex_counts;
    entry["exponents"] = ws.exponents;
    std::vector<double> kappas;
    for (const auto& k : ws.kappas) kappas.push_back(k.kappa);
    entry["kappas"] = kappas;
    if (!ws.exponents.empty()) {
      const auto [lo, hi] = std::minmax_element(ws.exponents.begin(), ws.exponents.end());
      double sum = 0.0;
      std::size_t inside = 0;
      for (double e : ws.exponents) {
        sum += e;
        inside += (e > 1.0 && e < 2.0) ? 1 : 0;
      }
      entry["exponent_mean"] = sum / ws.exponents.size();
      entry["exponent_min"] = *lo;
      entry["exponent_max"] = *hi;
      entry["fraction_in_open_1_2"] = static_cast<double>(inside) / ws.exponents.size();
    }
    entry["mean_profile_exponent"] = ws.mean_profile_fit.exponent;
    results["sizes"].push_back(entry);
    pooled.insert(pooled.end(), ws.kappas.begin(), ws.kappas.end());
  }
  if (results["sizes"].size() >= 2 && !interrupted()) {
    const auto grid = matched_u_grid(pooled, cfg.params.at("u_points").get<std::size_t>());
    const auto rep = kappa_tail_report(pooled, grid);
    results["kappa_tails"] = {{"u_grid", rep.u_grid},
                              {"deltas", rep.deltas},
                              {"tails", rep.tails},
                              {"envelope", rep.envelope},
                              {"spread", rep.spread}};
  }
}

void run_duality_audit(const ExperimentConfig& cfg, Json& results) {
  const LatticeSpec small(LatticeKind::bond, cfg.params.at("cols"), cfg.params.at("rows"));
  std::uint64_t checked = 0, failures = 0;
  for (const auto& c : enumerate_configurations(small)) {
    if (interrupted()) return;
    ++checked;
    failures += duality_xor_check(c) ? 0 : 1;
  }
  results["exhaustive"] = {{"cols", small.cols()},
                           {"rows", small.rows()},
                           {"checked", checked},
                           {"failures", failures}};
  results["random"] = Json::array();
  const double p = cfg.params.at("p");
  StreamBlocks blocks(cfg.master_seed);
  for (int n : cfg.params.at("sizes").get<std::vector<int>>()) {
    if (interrupted()) return;
    const LatticeSpec spec = crossing_rectangle(LatticeKind::bond, n, 1.0);
    const SeedSchedule s = blocks.next();
    const Tally t = parallel_tally(cfg.n_samples, cfg.workers, [&](std::uint64_t i) {
      return !duality_xor_check(sample_configuration(spec, p, derive_seed(s.master_seed, s.stream_index + i)));
    });
    results["random"].push_back(
        {{"n", n}, {"p", p}, {"checked", t.trials}, {"failures", t.successes}});
  }
}

void run_droplet_rotation(const ExperimentConfig& cfg, Json& results) {
  RotationRequest req;
  req.radius = cfg.params.at("radius");
  req.length = cfg.params.at("length");
  req.width = cfg.params.at("width");
  req.angles_deg = cfg.params.at("angles").get<std::vector<double>>();
  req.n_samples = cfg.n_samples;
  req.master_seed = cfg.master_seed;
  req.workers = cfg.workers;
  const Json& lam = cfg.params.at("lambda");
  if (lam.is_null()) {
    req.lambda = critical_intensity(req.radius, cfg.params.at("calibration_samples"),
                                    calibration_seed(cfg.master_seed), cfg.workers);
    results["critical_lambda"] = {{"radius", req.radius}, {"lambda", req.lambda}};
  } else {
    req.lambda = lam.get<double>();
  }
  if (interrupted()) return;
  const auto rep = rotation_invariance_report(req);
  results["lambda"] = req.lambda;
  results["points"] = Json::array();
  for (std::size_t i = 0; i < rep.estimates.size(); ++i) {
    Json point = estimate_json(rep.estimates[i]);
    point["angle_deg"] = rep.angles_deg[i];
    results["points"].push_back(point);
  }
  results["max_pairwise_z"] = rep.max_pairwise_z;
}

void run_independence(const ExperimentConfig& cfg, Json& results) {
  const auto kind = kind_of(cfg.params);
  IndependenceRequest req;
  req.kind = kind;
  req.n = cfg.params.at("n");
  req.p = density_param(cfg, "p", kind, req.n, results);
  req.a = rect_of(cfg.params.at("rect_a"));
  req.b = rect_of(cfg.params.at("rect_b"));
  req.n_samples = cfg.n_samples;
  req.master_seed = cfg.master_seed;
  req.workers = cfg.workers;
  const auto r = independence_test(req);
  auto interval = [&](std::uint64_t s) {
    const auto w = wilson_interval(s, r.n_samples);
    return Json{{"successes", s}, {"ci_low", w.low}, {"ci_high", w.high}};
  };
  results["n"] = req.n;
  results["delta"] = 1.0 / req.n;
  results["p"] = req.p;
  results["n_samples"] = r.n_samples;
  results["a"] = interval(r.count_a);
  results["a"]["p_hat"] = r.p_a;
  results["b"] = interval(r.count_b);
  results["b"]["p_hat"] = r.p_b;
  results["both"] = interval(r.count_both);
  results["both"]["p_hat"] = r.p_both;
  results["covariance"] = r.covariance;
  results["covariance_sigma"] = r.covariance_sigma;
  results["separation"] = r.separation;
}

using Runner = void (*)(const ExperimentConfig&, Json&);

Runner runner_for(Experiment e) {
  switch (e) {
    case Experiment::crossing: return run_crossing;
    case Experiment::cardy_compare: return run_cardy_compare;
    case Experiment::rg_map: return run_rg_map;
    case Experiment::collapse: return run_collapse;
    case Experiment::web_stats: return run_web_stats;
    case Experiment::duality_audit: return run_duality_audit;
    case Experiment::droplet_rotation: return run_droplet_rotation;
    case Experiment::independence: return run_independence;
  }
  throw InvalidArgument("unknown experiment");
}

}  // namespace

// ---- config -------------------------------------------------------------------

const char* to_string(Experiment experiment) { return kExperimentNames[static_cast<int>(experiment)]; }

Experiment experiment_from_string(const std::string& name) {
  for (Experiment e : all_experiments())
    if (name == to_string(e)) return e;
  throw InvalidArgument("unknown experiment '" + name + "'");
}

const std::vector<Experiment>& all_experiments() {
  static const std::vector<Experiment> all = {
      Experiment::crossing,  Experiment::cardy_compare,  Experiment::rg_map,
      Experiment::collapse,  Experiment::web_stats,      Experiment::duality_audit,
      Experiment::droplet_rotation, Experiment::independence};
  return all;
}

namespace {
std::string join_diagnostics(const std::vector<std::string>& d) {
  std::string out = "invalid config:";
  for (const auto& s : d) out += "\n  " + s;
  return out;
}
}  // namespace

ConfigError::ConfigError(std::vector<std::string> diagnostics)
    : InvalidArgument(join_diagnostics(diagnostics)), diagnostics_(std::move(diagnostics)) {}

Json ExperimentConfig::to_json() const {
  Json j = params;
  j["experiment"] = to_string(experiment);
  j["n_samples"] = n_samples;
  j["master_seed"] = master_seed;
  j["workers"] = workers;
  j["output"] = output;
  return j;
}

ExperimentConfig parse_config(const Json& raw) {
  if (!raw.is_object()) throw ConfigError({"config must be a JSON object"});
  if (!raw.contains("experiment")) throw ConfigError({"missing required key 'experiment'"});
  if (!raw.at("experiment").is_string()) throw ConfigError({"'experiment' must be a string"});
  Experiment exp;
  try {
    exp = experiment_from_string(raw.at("experiment").get<std::string>());
  } catch (const InvalidArgument& e) {
    throw ConfigError({e.what()});
  }
  const auto& fields = schema(exp);
  std::vector<std::string> diagnostics;
  for (const auto& [key, value] : raw.items()) {
    if (key == "experiment") continue;
    const bool known = std::any_of(fields.begin(), fields.end(),
                                   [&](const Field& f) { return key == f.name; });
    if (!known) diagnostics.push_back("unknown key '" + key + "' for experiment " + to_string(exp));
  }
  Json params = Json::object();
  for (const auto& f : fields) {
    const Json& v = raw.contains(f.name) ? raw.at(f.name) : f.fallback;
    const std::string problem = check_field(f, v);
    if (!problem.empty()) {
      diagnostics.push_back(problem);
      continue;
    }
    params[f.name] = v;
  }
  if (exp == Experiment::duality_audit && diagnostics.empty()) {
    const int c = params["cols"], r = params["rows"];
    if (static_cast<std::size_t>(2 * c * r) > kMaxEnumeratedElements)
      diagnostics.push_back("'cols' x 'rows' too large for exhaustive enumeration (2 cols rows <= 30)");
  }
  if (!diagnostics.empty()) throw ConfigError(std::move(diagnostics));
  ExperimentConfig cfg;
  cfg.experiment = exp;
  cfg.n_samples = params["n_samples"].get<std::uint64_t>();
  cfg.master_seed = params["master_seed"].get<std::uint64_t>();
  cfg.workers = params["workers"].get<int>();
  cfg.output = params["output"].get<std::string>();
  for (const char* k : {"n_samples", "master_seed", "workers", "output"}) params.erase(k);
  cfg.params = std::move(params);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path.string());
  Json raw;
  try {
    raw = Json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const Json::parse_error& e) {
    throw ConfigError({std::string("malformed JSON: ") + e.what()});
  }
  return parse_config(raw);
}

ExperimentConfig default_config(Experiment experiment) {
  return parse_config(Json{{"experiment", to_string(experiment)}});
}

// ---- records ------------------------------------------------------------------

std::string config_digest(const ExperimentConfig& config) {
  Json j = config.to_json();
  j.erase("workers");
  j.erase("output");
  return digest_of(j);
}

std::string results_digest(const Json& results) { return digest_of(results); }

Json RunRecord::to_json() const {
  return {{"artifact_version", artifact_version},
          {"experiment", experiment},
          {"config", config},
          {"config_digest", config_digest},
          {"complete", complete},
          {"results", results},
          {"results_digest", results_digest},
          {"wall_seconds", wall_seconds}};
}

RunRecord RunRecord::from_json(const Json& j) {
  RunRecord r;
  try {
    r.artifact_version = j.at("artifact_version").get<std::string>();
    r.experiment = j.at("experiment").get<std::string>();
    r.config = j.at("config");
    r.config_digest = j.at("config_digest").get<std::string>();
    r.complete = j.at("complete").get<bool>();
    r.results = j.at("results");
    r.results_digest = j.at("results_digest").get<std::string>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("malformed run record: ") + e.what());
  }
  return r;
}

RunRecord run(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.experiment = to_string(config.experiment);
  rec.config = config.to_json();
  rec.config_digest = percweb::config_digest(config);
  rec.results = Json::object();
  try {
    runner_for(config.experiment)(config, rec.results);
  } catch (const Error&) {
    // Partial tallies can violate preconditions of the final statistics.
    if (!interrupted()) throw;
  }
  rec.complete = !interrupted();
  rec.results_digest = results_digest(rec.results);
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

// ---- tables -------------------------------------------------------------------

std::vector<TableRow> table_rows(const RunRecord& record) {
  std::vector<TableRow> rows;
  const Json& r = record.results;
  auto row = [](std::string series, double delta, double t, double aspect, const Json& e) {
    return TableRow{std::move(series),     delta,
                    t,                     aspect,
                    e.at("p_hat").get<double>(), e.at("ci_low").get<double>(),
                    e.at("ci_high").get<double>(), e.contains("n_samples") ? e.at("n_samples").get<std::uint64_t>() : 0};
  };
  const Experiment exp = experiment_from_string(record.experiment);
  switch (exp) {
    case Experiment::crossing:
    case Experiment::cardy_compare:
      for (const auto& p : r.value("points", Json::array()))
        rows.push_back(row(record.experiment, p.at("delta"), 0.0, p.at("aspect"), p));
      break;
    case Experiment::rg_map:
      for (const auto& p : r.value("points", Json::array())) {
        const double d = r.at("delta");
        rows.push_back(row("R1", d, p.at("t"), 1.0, p.at("r1")));
        rows.push_back(row("R2", d, p.at("t"), 1.0, p.at("r2")));
      }
      break;
    case Experiment::collapse:
      for (const auto& c : r.value("cells", Json::array()))
        rows.push_back(row("R1", c.at("delta"), c.at("t"), 1.0, c));
      break;
    case Experiment::droplet_rotation:
      for (const auto& p : r.value("points", Json::array())) {
        std::ostringstream name;
        name << "theta=" << p.at("angle_deg").get<double>();
        rows.push_back(row(name.str(), 0.0, 0.0, 1.0, p));
      }
      break;
    case Experiment::independence:
      if (r.contains("covariance"))
        for (const char* ev : {"a", "b", "both"}) {
          Json e = r.at(ev);
          e["n_samples"] = r.at("n_samples");
          rows.push_back(row(ev, r.at("delta"), 0.0, 1.0, e));
        }
      break;
    case Experiment::web_stats:
    case Experiment::duality_audit:
      break;
  }
  return rows;
}

void write_table(const std::vector<TableRow>& rows, std::ostream& out) {
  const auto old = out.precision(10);
  out << "series,delta,t,aspect,p_hat,ci_low,ci_high,n\n";
  for (const auto& r : rows)
    out << r.series << ',' << r.delta << ',' << r.t << ',' << r.aspect << ',' << r.p_hat << ','
        << r.ci_low << ',' << r.ci_high << ',' << r.n << '\n';
  out.precision(old);
}

void write_record(const RunRecord& record, const std::filesystem::path& log_path) {
  if (log_path.has_parent_path()) std::filesystem::create_directories(log_path.parent_path());
  {
    std::ofstream out(log_path, std::ios::app);
    if (!out) throw Error("cannot write " + log_path.string());
    out << record.to_json().dump() << '\n';
  }
  auto table_path = log_path;
  table_path.replace_extension(".csv");
  std::ofstream table(table_path);
  if (!table) throw Error("cannot write " + table_path.string());
  write_table(table_rows(record), table);
}

std::vector<RunRecord> read_records(const std::filesystem::path& log_path) {
  std::ifstream in(log_path);
  if (!in) throw InvalidArgument("cannot open " + log_path.string());
  std::vector<RunRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(RunRecord::from_json(Json::parse(line)));
    } catch (const Json::parse_error& e) {
      throw InvalidArgument(std::string("malformed record line: ") + e.what());
    }
  }
  return out;
}

// ---- plots --------------------------------------------------------------------

namespace {

class PlotWriter {
 public:
  PlotWriter(std::filesystem::path dir, std::string stem) : dir_(std::move(dir)), stem_(std::move(stem)) {
    std::filesystem::create_directories(dir_);
  }

  // Opens <stem>_<name>.dat and returns its file name.
  std::string data(const std::string& name, const std::function<void(std::ostream&)>& fill) {
    const std::string file = stem_ + "_" + name + ".dat";
    std::ofstream out(dir_ / file);
    out.precision(10);
    fill(out);
    written_.push_back(dir_ / file);
    return file;
  }

  void script(const std::string& body, const std::string& title) {
    const std::string file = stem_ + ".gp";
    std::ofstream out(dir_ / file);
    out << "set terminal pngcairo size 900,650\n"
        << "set output '" << stem_ << ".png'\n"
        << "set datafile separator whitespace\n"
        << "set key left top\n"
        << "set title '" << title << "'\n"
        << body;
    written_.push_back(dir_ / file);
  }

  std::vector<std::filesystem::path> files() const { return written_; }

 private:
  std::filesystem::path dir_;
  std::string stem_;
  std::vector<std::filesystem::path> written_;
};

std::string quoted(const std::string& s) { return "'" + s + "'"; }

}  // namespace

std::vector<std::filesystem::path> emit_plots(const RunRecord& record,
                                              const std::filesystem::path& dir) {
  if (!record.complete)
    throw InvalidArgument("record is incomplete (interrupted run); refusing to plot");
  const Experiment exp = experiment_from_string(record.experiment);
  const Json& r = record.results;
  PlotWriter w(dir, record.experiment);
  std::ostringstream s;
  switch (exp) {
    case Experiment::crossing: {
      const auto f = w.data("points", [&](std::ostream& o) {
        o << "# delta aspect p_hat ci_low ci_high\n";
        for (const auto& p : r.at("points"))
          o << p.at("delta").get<double>() << ' ' << p.at("aspect").get<double>() << ' '
            << p.at("p_hat").get<double>() << ' ' << p.at("ci_low").get<double>() << ' '
            << p.at("ci_high").get<double>() << '\n';
      });
      s << "set logscale x\nset xlabel 'delta'\nset ylabel 'crossing probability'\nset yrange [0:1]\n"
        << "plot " << quoted(f) << " using 1:3:4:5 with yerrorbars title 'Monte Carlo'\n";
      w.script(s.str(), "crossing probability");
      break;
    }
    case Experiment::cardy_compare: {
      const auto mc = w.data("mc", [&](std::ostream& o) {
        o << "# aspect p_hat ci_low ci_high\n";
        for (const auto& p : r.at("points"))
          o << p.at("aspect").get<double>() << ' ' << p.at("p_hat").get<double>() << ' '
            << p.at("ci_low").get<double>() << ' ' << p.at("ci_high").get<double>() << '\n';
      });
      double lo = 0.25, hi = 3.0;
      for (const auto& p : r.at("points")) {
        lo = std::min(lo, p.at("aspect").get<double>() * 0.8);
        hi = std::max(hi, p.at("aspect").get<double>() * 1.2);
      }
      const auto curve = w.data("cardy", [&](std::ostream& o) {
        o << "# aspect cardy_crossing\n";
        for (int i = 0; i <= 200; ++i) {
          const double a = lo * std::pow(hi / lo, i / 200.0);
          o << a << ' ' << cardy_crossing(a) << '\n';
        }
      });
      s << "set logscale x\nset xlabel 'aspect (width / height)'\nset ylabel 'left-right crossing probability'\n"
        << "set yrange [0:1]\nset key right top\n"
        << "plot " << quoted(curve) << " using 1:2 with lines title 'conformal formula', \\\n"
        << "     " << quoted(mc) << " using 1:2:3:4 with yerrorbars title 'Monte Carlo'\n";
      w.script(s.str(), "crossing probability against aspect");
      break;
    }
    case Experiment::rg_map: {
      const auto f = w.data("points", [&](std::ostream& o) {
        o << "# t r1 r2 r1_low r1_high r2_low r2_high\n";
        for (const auto& p : r.at("points"))
          o << p.at("t").get<double>() << ' ' << p.at("r1").at("p_hat").get<double>() << ' '
            << p.at("r2").at("p_hat").get<double>() << ' ' << p.at("r1").at("ci_low").get<double>()
            << ' ' << p.at("r1").at("ci_high").get<double>() << ' '
            << p.at("r2").at("ci_low").get<double>() << ' ' << p.at("r2").at("ci_high").get<double>()
            << '\n';
      });
      s << "set xlabel 'R1'\nset ylabel 'R2'\nset xrange [0:1]\nset yrange [0:1]\nset size square\n";
      const Json& fp = r.at("fixed_point");
      if (fp.at("bracketed").get<bool>()) {
        s << "rstar = " << fp.at("r_star").get<double>() << "\nslope = " << fp.at("slope").get<double>()
          << "\nfit(x) = rstar + slope * (x - rstar)\n"
          << "plot x with lines dashtype 2 title 'R2 = R1', \\\n"
          << "     fit(x) with lines title sprintf('slope %.3f at fixed point', slope), \\\n"
          << "     " << quoted(f) << " using 2:3:4:5:6:7 with xyerrorbars title 'estimates'\n";
      } else {
        s << "plot x with lines dashtype 2 title 'R2 = R1', \\\n"
          << "     " << quoted(f) << " using 2:3:4:5:6:7 with xyerrorbars title 'estimates'\n";
      }
      w.script(s.str(), "R1 against R2");
      break;
    }
    case Experiment::collapse: {
      const auto sizes = r.at("sizes").get<std::vector<int>>();
      std::vector<std::string> files;
      for (int n : sizes)
        files.push_back(w.data("n" + std::to_string(n), [&](std::ostream& o) {
          o << "# t r1 ci_low ci_high\n";
          for (const auto& c : r.at("cells"))
            if (c.at("n").get<int>() == n)
              o << c.at("t").get<double>() << ' ' << c.at("p_hat").get<double>() << ' '
                << c.at("ci_low").get<double>() << ' ' << c.at("ci_high").get<double>() << '\n';
        }));
      s << "set xlabel 't'\nset ylabel 'R1'\nset yrange [0:1]\n";
      std::string band;
      if (sizes.size() > 1) {
        band = w.data("band", [&](std::ostream& o) {
          o << "# t min max\n";
          for (double t : r.at("t_grid").get<std::vector<double>>()) {
            double mn = 1.0, mx = 0.0;
            for (const auto& c : r.at("cells"))
              if (c.at("t").get<double>() == t) {
                mn = std::min(mn, c.at("p_hat").get<double>());
                mx = std::max(mx, c.at("p_hat").get<double>());
              }
            o << t << ' ' << mn << ' ' << mx << '\n';
          }
        });
      }
      s << "plot ";
      if (!band.empty())
        s << quoted(band) << " using 1:2:3 with filledcurves fs transparent solid 0.2 title 'spread', \\\n     ";
      for (std::size_t i = 0; i < files.size(); ++i) {
        if (i) s << ", \\\n     ";
        s << quoted(files[i]) << " using 1:2:3:4 with yerrorlines title 'n = " << sizes[i] << "'";
      }
      s << '\n';
      w.script(s.str(), "scaling collapse");
      break;
    }
    case Experiment::web_stats: {
      const auto ex = w.data("exponents", [&](std::ostream& o) {
        o << "# delta exponent\n";
        for (const auto& e : r.at("sizes"))
          for (double x : e.at("exponents").get<std::vector<double>>())
            o << e.at("delta").get<double>() << ' ' << x << '\n';
      });
      if (r.contains("kappa_tails")) {
        const Json& k = r.at("kappa_tails");
        const auto deltas = k.at("deltas").get<std::vector<double>>();
        const auto tf = w.data("kappa_tails", [&](std::ostream& o) {
          o << "# u";
          for (double d : deltas) o << " tail(delta=" << d << ')';
          o << '\n';
          const auto u = k.at("u_grid").get<std::vector<double>>();
          for (std::size_t i = 0; i < u.size(); ++i) {
            o << u[i];
            for (std::size_t g = 0; g < deltas.size(); ++g) o << ' ' << k.at("tails")[g][i].get<double>();
            o << '\n';
          }
        });
        s << "set multiplot layout 1,2\nset xlabel 'u'\nset ylabel 'P(kappa >= u)'\nset logscale y\nplot ";
        for (std::size_t g = 0; g < deltas.size(); ++g) {
          if (g) s << ", \\\n     ";
          s << quoted(tf) << " using 1:" << g + 2 << " with linespoints title 'delta = " << deltas[g] << "'";
        }
        s << "\nunset logscale y\n";
      } else {
        s << "set multiplot layout 1,1\n";
      }
      s << "set xlabel 'tortuosity exponent'\nset ylabel 'count'\nbinwidth = 0.02\n"
        << "bin(x) = binwidth * floor(x / binwidth)\nset boxwidth binwidth\n"
        << "plot " << quoted(ex) << " using (bin($2)):(1.0) smooth frequency with boxes title 'curves'\n"
        << "unset multiplot\n";
      w.script(s.str(), "lowest-crossing regularity");
      break;
    }
    case Experiment::duality_audit: {
      const auto f = w.data("counts", [&](std::ostream& o) {
        o << "# label checked failures\n";
        const Json& e = r.at("exhaustive");
        o << "exhaustive_" << e.at("cols").get<int>() << 'x' << e.at("rows").get<int>() << ' '
          << e.at("checked").get<std::uint64_t>() << ' ' << e.at("failures").get<std::uint64_t>() << '\n';
        for (const auto& x : r.at("random"))
          o << "random_n" << x.at("n").get<int>() << ' ' << x.at("checked").get<std::uint64_t>() << ' '
            << x.at("failures").get<std::uint64_t>() << '\n';
      });
      s << "set style fill solid 0.5\nset boxwidth 0.6\nset ylabel 'failures'\nset yrange [0:*]\n"
        << "plot " << quoted(f) << " using 0:3:xtic(1) with boxes title 'duality failures'\n";
      w.script(s.str(), "duality audit");
      break;
    }
    case Experiment::droplet_rotation: {
      const auto f = w.data("points", [&](std::ostream& o) {
        o << "# angle_deg p_hat ci_low ci_high\n";
        for (const auto& p : r.at("points"))
          o << p.at("angle_deg").get<double>() << ' ' << p.at("p_hat").get<double>() << ' '
            << p.at("ci_low").get<double>() << ' ' << p.at("ci_high").get<double>() << '\n';
      });
      s << "set xlabel 'rotation (degrees)'\nset ylabel 'crossing probability'\nset yrange [0:1]\n"
        << "plot " << quoted(f) << " using 1:2:3:4 with yerrorbars title 'droplet model'\n";
      w.script(s.str(), "rotated rectangle crossings");
      break;
    }
    case Experiment::independence: {
      const auto f = w.data("events", [&](std::ostream& o) {
        o << "# event p_hat ci_low ci_high\n";
        for (const char* ev : {"a", "b", "both"})
          o << ev << ' ' << r.at(ev).at("p_hat").get<double>() << ' ' << r.at(ev).at("ci_low").get<double>()
            << ' ' << r.at(ev).at("ci_high").get<double>() << '\n';
        const double prod = r.at("a").at("p_hat").get<double>() * r.at("b").at("p_hat").get<double>();
        o << "product " << prod << ' ' << prod << ' ' << prod << '\n';
      });
      s << "set style fill solid 0.5\nset boxwidth 0.6\nset yrange [0:1]\nset ylabel 'probability'\n"
        << "plot " << quoted(f) << " using 0:2:xtic(1) with boxes title 'estimate', \\\n"
        << "     " << quoted(f) << " using 0:2:3:4 with yerrorbars title ''\n";
      w.script(s.str(), "crossings of disjoint rectangles");
      break;
    }
  }
  return w.files();
}

}  // namespace percweb
