#include "percweb/clusters.hpp"

#include <numeric>
#include <string>

#include "percweb/error.hpp"

namespace percweb {

const char* to_string(Direction direction) {
  return direction == Direction::left_right ? "left_right" : "top_bottom";
}

Direction direction_from_string(const char* name) {
  const std::string s(name);
  if (s == "left_right") return Direction::left_right;
  if (s == "top_bottom") return Direction::top_bottom;
  throw InvalidArgument("unknown direction '" + s + "' (expected left_right or top_bottom)");
}

UnionFind::UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
  std::iota(parent_.begin(), parent_.end(), 0u);
}

bool UnionFind::unite(std::uint32_t a, std::uint32_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  return true;
}

ClusterLabeling::ClusterLabeling(LatticeSpec spec, std::vector<std::uint32_t> labels,
                                 std::vector<std::uint8_t> touch_by_site,
                                 std::size_t cluster_count)
    : spec_(spec),
      labels_(std::move(labels)),
      touch_(std::move(touch_by_site)),
      cluster_count_(cluster_count) {}

std::vector<std::uint32_t> ClusterLabeling::cluster_labels() const {
  std::vector<std::uint32_t> out;
  out.reserve(cluster_count_);
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == i) out.push_back(static_cast<std::uint32_t>(i));
  return out;
}

namespace {

UnionFind union_open_elements(const Configuration& config) {
  const LatticeSpec& spec = config.spec();
  const int cols = spec.cols();
  const int rows = spec.rows();
  UnionFind uf(spec.site_count());
  const bool site_kind = spec.kind() == LatticeKind::site;
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      const auto i = static_cast<std::uint32_t>(spec.site_index(x, y));
      if (site_kind) {
        if (!config.occupied(i)) continue;
        if (x + 1 < cols && config.occupied(i + 1)) uf.unite(i, i + 1);
        if (y + 1 < rows && config.occupied(i + cols)) uf.unite(i, i + cols);
      } else {
        if (config.east_open(x, y)) uf.unite(i, i + 1);
        if (config.north_open(x, y)) uf.unite(i, i + cols);
      }
    }
  }
  return uf;
}

}  // namespace

ClusterLabeling label_clusters(const Configuration& config) {
  const LatticeSpec& spec = config.spec();
  const int cols = spec.cols();
  const int rows = spec.rows();
  const std::size_t n = spec.site_count();
  const bool site_kind = spec.kind() == LatticeKind::site;

  UnionFind uf = union_open_elements(config);

  // Sites are visited in increasing order, so the first site seen for a root
  // is the smallest index of its cluster.
  constexpr std::uint32_t unset = ClusterLabeling::kNoCluster;
  std::vector<std::uint32_t> canonical(n, unset);
  std::vector<std::uint32_t> labels(n, unset);
  std::vector<std::uint8_t> touch(n, 0);
  std::size_t clusters = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (site_kind && !config.occupied(i)) continue;
    const std::uint32_t root = uf.find(static_cast<std::uint32_t>(i));
    if (canonical[root] == unset) {
      canonical[root] = static_cast<std::uint32_t>(i);
      ++clusters;
    }
    const std::uint32_t label = canonical[root];
    labels[i] = label;
    const int x = static_cast<int>(i % cols);
    const int y = static_cast<int>(i / cols);
    std::uint8_t mask = 0;
    if (x == 0) mask |= side::left;
    if (x == cols - 1) mask |= side::right;
    if (y == 0) mask |= side::bottom;
    if (y == rows - 1) mask |= side::top;
    touch[label] |= mask;
  }
  return ClusterLabeling(spec, std::move(labels), std::move(touch), clusters);
}

namespace {

std::uint8_t required_sides(Direction direction) {
  return direction == Direction::left_right ? (side::left | side::right)
                                            : (side::bottom | side::top);
}

}  // namespace

std::size_t count_spanning_clusters(const ClusterLabeling& labeling, Direction direction) {
  const std::uint8_t need = required_sides(direction);
  const auto& labels = labeling.labels();
  std::size_t count = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == i && (labeling.boundary_touch(labels[i]) & need) == need) ++count;
  return count;
}

bool has_crossing(const ClusterLabeling& labeling, Direction direction) {
  const std::uint8_t need = required_sides(direction);
  const LatticeSpec& spec = labeling.spec();
  // Every crossing cluster has a site in column 0 (row 0 for top_bottom).
  if (direction == Direction::left_right) {
    for (int y = 0; y < spec.rows(); ++y) {
      const auto l = labeling.label(0, y);
      if (l != ClusterLabeling::kNoCluster && (labeling.boundary_touch(l) & need) == need)
        return true;
    }
  } else {
    for (int x = 0; x < spec.cols(); ++x) {
      const auto l = labeling.label(x, 0);
      if (l != ClusterLabeling::kNoCluster && (labeling.boundary_touch(l) & need) == need)
        return true;
    }
  }
  return false;
}


// Same verdict as has_crossing(label_clusters(config), direction) without
// building canonical labels.
bool has_crossing(const Configuration& config, Direction direction) {
  const LatticeSpec& spec = config.spec();
  UnionFind uf = union_open_elements(config);
  const bool site_kind = spec.kind() == LatticeKind::site;
  const bool lr = direction == Direction::left_right;
  const int len = lr ? spec.rows() : spec.cols();
  auto first_side = [&](int k) { return lr ? spec.site_index(0, k) : spec.site_index(k, 0); };
  auto second_side = [&](int k) {
    return lr ? spec.site_index(spec.cols() - 1, k) : spec.site_index(k, spec.rows() - 1);
  };
  std::vector<char> marked(spec.site_count(), 0);
  for (int k = 0; k < len; ++k) {
    const std::size_t i = first_side(k);
    if (site_kind && !config.occupied(i)) continue;
    marked[uf.find(static_cast<std::uint32_t>(i))] = 1;
  }
  for (int k = 0; k < len; ++k) {
    const std::size_t i = second_side(k);
    if (site_kind && !config.occupied(i)) continue;
    if (marked[uf.find(static_cast<std::uint32_t>(i))]) return true;
  }
  return false;
}

bool duality_xor_check(const Configuration& config) {
  if (config.spec().kind() != LatticeKind::bond)
    throw UnsupportedOperation("duality check needs a bond configuration");
  const bool primal = has_crossing(config, Direction::left_right);
  const bool dual = has_crossing(dual_configuration(config), Direction::left_right);
  return primal != dual;
}

}  // namespace percweb
