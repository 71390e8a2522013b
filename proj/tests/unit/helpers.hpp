#pragma once

#include <set>
#include <vector>

#include "percweb/core.hpp"
#include "percweb/rng.hpp"
#include "percweb/web.hpp"

namespace testing_support {

using percweb::Configuration;
using percweb::LatticeSpec;

inline Configuration filled(const LatticeSpec& spec, bool value) {
  Configuration c(spec, 0, value ? 1.0 : 0.0);
  for (std::size_t i = 0; i < spec.element_count(); ++i) c.set(i, value);
  return c;
}

// Random self-avoiding lattice walk with `steps` steps; restarts when stuck,
// so keep steps in the low hundreds.
inline percweb::Curve random_walk_curve(std::size_t steps, std::uint64_t seed, double spacing = 0.01) {
  percweb::SplitMix64 rng(seed);
  const int dx[4] = {1, 0, -1, 0};
  const int dy[4] = {0, 1, 0, -1};
  for (;;) {
    std::vector<std::pair<int, int>> path{{0, 0}};
    std::set<std::pair<int, int>> used{{0, 0}};
    bool stuck = false;
    while (path.size() <= steps && !stuck) {
      const auto [x, y] = path.back();
      std::vector<std::pair<int, int>> free;
      for (int d = 0; d < 4; ++d) {
        const std::pair<int, int> n{x + dx[d], y + dy[d]};
        if (!used.count(n)) free.push_back(n);
      }
      if (free.empty()) {
        stuck = true;
      } else {
        path.push_back(free[rng() % free.size()]);
        used.insert(path.back());
      }
    }
    if (stuck) continue;
    std::vector<percweb::Point> pts;
    for (const auto& [x, y] : path) pts.emplace_back(0.5 + x * spacing, 0.5 + y * spacing);
    return percweb::Curve(std::move(pts), spacing);
  }
}

}  // namespace testing_support
