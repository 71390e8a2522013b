#include "selftest.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <string>

#include "oracle.hpp"
#include "percweb/clusters.hpp"
#include "percweb/scaling.hpp"

namespace percweb::oracle {

namespace {

std::uint64_t count_failures(const LatticeSpec& spec,
                             const std::function<bool(const Configuration&)>& ok) {
  std::uint64_t bad = 0;
  for (const auto& c : enumerate_configurations(spec)) bad += ok(c) ? 0 : 1;
  return bad;
}

bool labels_match(const Configuration& c) { return label_clusters(c).labels() == bfs_labels(c); }

bool crossing_matches(const Configuration& c) {
  return has_crossing(c, Direction::left_right) == path_exists(c, true) &&
         has_crossing(c, Direction::top_bottom) == path_exists(c, false);
}

bool lowest_matches(const Configuration& c) {
  const auto got = extract_lowest_crossing(c);
  const auto want = lowest_crossing(c);
  if (!got || !want) return got.has_value() == want.has_value();
  return got->vertices() == Curve::from_sites(c.spec(), *want).vertices();
}

}  // namespace

int run_selftest(std::ostream& out) {
  int failed = 0;
  auto report = [&](const std::string& name, std::uint64_t failures, std::uint64_t total) {
    out << (failures == 0 ? "ok   " : "FAIL ") << name << " (" << total - failures << "/" << total
        << ")\n";
    failed += failures == 0 ? 0 : 1;
  };

  const LatticeSpec bond32(LatticeKind::bond, 3, 2);
  const LatticeSpec bond33(LatticeKind::bond, 3, 3);
  const LatticeSpec site33(LatticeKind::site, 3, 3);
  const LatticeSpec site44(LatticeKind::site, 4, 4);

  report("duality xor, 3x2 bond exhaustive",
         count_failures(bond32, [](const Configuration& c) { return duality_xor_check(c); }),
         enumerate_configurations(bond32).size());

  const double exact = exact_crossing_probability(bond32, 0.5, Direction::left_right);
  report("self-dual rectangle crossing probability is 1/2", exact == 0.5 ? 0 : 1, 1);

  for (const auto* spec : {&bond32, &site33, &site44}) {
    const std::string tag = std::to_string(spec->cols()) + "x" + std::to_string(spec->rows()) + " " +
                            to_string(spec->kind());
    const auto total = enumerate_configurations(*spec).size();
    report("union-find labels vs BFS, " + tag, count_failures(*spec, labels_match), total);
    report("crossing vs DFS, " + tag, count_failures(*spec, crossing_matches), total);
  }
  report("lowest crossing vs exhaustive paths, 3x3 site", count_failures(site33, lowest_matches),
         enumerate_configurations(site33).size());
  report("lowest crossing vs exhaustive paths, 3x3 bond", count_failures(bond33, lowest_matches),
         enumerate_configurations(bond33).size());

  std::uint64_t cover_bad = 0, cover_total = 0;
  for (int order = 1; order <= 3; ++order) {
    const Curve h = hilbert_curve(order);
    for (double s = 0.05; s < 1.5; s *= 1.3) {
      ++cover_total;
      cover_bad += covering_count(h, s) == min_cover_dp(h, s) ? 0 : 1;
    }
  }
  report("greedy cover vs DP, Hilbert curves", cover_bad, cover_total);

  std::uint64_t cardy_bad = 0;
  for (int i = 1; i <= 19; ++i) {
    const double eta = i / 20.0;
    cardy_bad += std::abs(cardy_formula(eta) - cardy_quadrature(eta)) < 1e-9 ? 0 : 1;
  }
  report("conformal formula vs quadrature", cardy_bad, 19);

  out << (failed == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return failed;
}

}  // namespace percweb::oracle
