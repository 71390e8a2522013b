#pragma once

// Cluster labeling by union-find, crossing detection, spanning-cluster counts
// and the exact planar duality check.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "percweb/core.hpp"

namespace percweb {

enum class Direction : std::uint8_t { left_right = 0, top_bottom = 1 };

const char* to_string(Direction direction);
Direction direction_from_string(const char* name);

namespace side {
inline constexpr std::uint8_t left = 1;
inline constexpr std::uint8_t right = 2;
inline constexpr std::uint8_t bottom = 4;
inline constexpr std::uint8_t top = 8;
}  // namespace side

// Disjoint-set forest with path halving and union by size.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n);

  std::uint32_t find(std::uint32_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }
  // Returns true if a merge happened.
  bool unite(std::uint32_t a, std::uint32_t b);
  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
};

class ClusterLabeling {
 public:
  // Label of vacant sites in site percolation; they belong to no cluster.
  static constexpr std::uint32_t kNoCluster = 0xffffffffu;

  ClusterLabeling(LatticeSpec spec, std::vector<std::uint32_t> labels,
                  std::vector<std::uint8_t> touch_by_site, std::size_t cluster_count);

  const LatticeSpec& spec() const { return spec_; }
  // Canonical label = smallest site index in the cluster.
  std::uint32_t label(std::size_t site) const { return labels_[site]; }
  std::uint32_t label(int x, int y) const { return labels_[spec_.site_index(x, y)]; }
  const std::vector<std::uint32_t>& labels() const { return labels_; }
  std::size_t cluster_count() const { return cluster_count_; }
  // Bitmask of side:: flags touched by the cluster whose canonical label is given.
  std::uint8_t boundary_touch(std::uint32_t label) const { return touch_[label]; }
  // Canonical labels in increasing order.
  std::vector<std::uint32_t> cluster_labels() const;

 private:
  LatticeSpec spec_;
  std::vector<std::uint32_t> labels_;
  std::vector<std::uint8_t> touch_;
  std::size_t cluster_count_;
};

ClusterLabeling label_clusters(const Configuration& config);

bool has_crossing(const ClusterLabeling& labeling, Direction direction);
std::size_t count_spanning_clusters(const ClusterLabeling& labeling, Direction direction);

// Convenience: label and test in one go.
bool has_crossing(const Configuration& config, Direction direction);

// Exactly one of {primal left-right crossing, dual left-right crossing of
// dual_configuration(config)} holds. Bond kind only.
bool duality_xor_check(const Configuration& config);

}  // namespace percweb
