#pragma once

// Lattice geometry, reproducible sampling, planar bond duality and tiny
// configuration-space enumeration.
//
// Conventions used throughout the library:
//   * A lattice has cols x rows sites; site (x, y) has index y * cols + x,
//     with y = 0 the bottom row.
//   * Macroscopic frame is the unit square with cell size
//     delta = 1 / max(cols, rows); site (x, y) sits at ((x+1/2) delta, (y+1/2) delta).
//   * Site kind: one element per site, 4-neighbour connectivity.
//   * Bond kind: every site owns its east bond and its north bond, so
//     element_count = 2 * cols * rows. East bonds come first (row-major),
//     then north bonds (row-major). East bonds of the last column and north
//     bonds of the top row leave the rectangle; they are sampled like every
//     other element but never connect anything ("boundary phantoms").

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "percweb/rng.hpp"

namespace percweb {

enum class LatticeKind : std::uint8_t { site = 0, bond = 1 };

const char* to_string(LatticeKind kind);
LatticeKind lattice_kind_from_string(const char* name);

struct Site {
  int x = 0;
  int y = 0;
  friend bool operator==(const Site&, const Site&) = default;
};

class LatticeSpec {
 public:
  // Throws InvalidArgument if cols or rows is zero.
  LatticeSpec(LatticeKind kind, int cols, int rows);

  LatticeKind kind() const { return kind_; }
  int cols() const { return cols_; }
  int rows() const { return rows_; }
  std::size_t site_count() const {
    return static_cast<std::size_t>(cols_) * static_cast<std::size_t>(rows_);
  }
  std::size_t element_count() const {
    return kind_ == LatticeKind::site ? site_count() : 2 * site_count();
  }
  // delta = 1 / spacing_denominator()
  int spacing_denominator() const { return cols_ > rows_ ? cols_ : rows_; }
  double spacing() const { return 1.0 / spacing_denominator(); }

  std::size_t site_index(int x, int y) const {
    return static_cast<std::size_t>(y) * cols_ + x;
  }
  Site site_at(std::size_t index) const {
    return {static_cast<int>(index % cols_), static_cast<int>(index / cols_)};
  }
  bool contains(Site s) const {
    return s.x >= 0 && s.y >= 0 && s.x < cols_ && s.y < rows_;
  }

  // Bond element indices (bond kind only).
  std::size_t east_bond(int x, int y) const { return site_index(x, y); }
  std::size_t north_bond(int x, int y) const { return site_count() + site_index(x, y); }
  bool is_phantom(std::size_t element) const;

  friend bool operator==(const LatticeSpec&, const LatticeSpec&) = default;

 private:
  LatticeKind kind_;
  int cols_;
  int rows_;
};

class Configuration {
 public:
  Configuration(LatticeSpec spec, std::uint64_t seed, double density);

  const LatticeSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  double density() const { return density_; }
  std::size_t element_count() const { return spec_.element_count(); }

  bool occupied(std::size_t element) const {
    return (words_[element >> 6] >> (element & 63)) & 1u;
  }
  void set(std::size_t element, bool value) {
    const std::uint64_t bit = std::uint64_t{1} << (element & 63);
    if (value)
      words_[element >> 6] |= bit;
    else
      words_[element >> 6] &= ~bit;
  }
  std::size_t count_occupied() const;

  // Site kind: is the site occupied. Bond kind: always true (every site is a vertex).
  bool site_open(int x, int y) const {
    return spec_.kind() == LatticeKind::bond || occupied(spec_.site_index(x, y));
  }
  // Bond kind only; phantom bonds report closed.
  bool east_open(int x, int y) const {
    return x + 1 < spec_.cols() && occupied(spec_.east_bond(x, y));
  }
  bool north_open(int x, int y) const {
    return y + 1 < spec_.rows() && occupied(spec_.north_bond(x, y));
  }
  // Is the step between two 4-adjacent sites passable (both kinds).
  bool passable(Site from, Site to) const;

  std::span<const std::uint64_t> words() const { return words_; }

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  LatticeSpec spec_;
  std::uint64_t seed_;
  double density_;
  std::vector<std::uint64_t> words_;
};

// Element i is open iff the i-th SplitMix64 uniform of the seed stream is < p.
// Sharing the seed across densities couples the samples monotonically.
Configuration sample_configuration(const LatticeSpec& spec, double p, std::uint64_t seed);

// Planar dual of a bond configuration on cols x rows sites (cols >= 2).
//
// Dual sites sit at the faces of the primal rectangle plus the outer strips
// below and above it, and the dual is returned rotated a quarter turn so its
// own left-right crossing is the primal's top-bottom obstruction. The dual
// lattice is therefore (rows + 1) x (cols - 1). Dual site (x', y') sits at
// primal coordinates (cols - 3/2 - y', x' - 1/2).
//
// Each dual bond that crosses a primal bond is open iff that bond is closed.
// Dual bonds crossing no primal bond (phantoms, and the dual's first/last
// column verticals) are inert and set closed. Applying the map twice yields
// the primal rotated by a half turn on every crossing-relevant bond.
Configuration dual_configuration(const Configuration& config);

// Half-turn rotation of a bond configuration (inert bonds set closed). This is
// the canonical re-identification for dual_configuration(dual_configuration(c)).
Configuration rotate_half_turn(const Configuration& config);

// True for bonds that can affect a left-right crossing: non-phantom east
// bonds, and non-phantom north bonds strictly inside the first/last column.
bool crossing_relevant(const LatticeSpec& spec, std::size_t element);

// All 2^element_count occupancy patterns in lexicographic bit order (element
// 0 is the most significant bit). density is set to the 0.5 sentinel; seed
// carries the pattern number.
class ConfigurationRange {
 public:
  explicit ConfigurationRange(LatticeSpec spec);

  class iterator {
   public:
    using value_type = Configuration;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    iterator(const LatticeSpec* spec, std::uint64_t pattern) : spec_(spec), pattern_(pattern) {}
    Configuration operator*() const;
    iterator& operator++() {
      ++pattern_;
      return *this;
    }
    iterator operator++(int) {
      auto copy = *this;
      ++pattern_;
      return copy;
    }
    bool operator==(const iterator& other) const { return pattern_ == other.pattern_; }

   private:
    const LatticeSpec* spec_ = nullptr;
    std::uint64_t pattern_ = 0;
  };

  iterator begin() const { return {&spec_, 0}; }
  iterator end() const { return {&spec_, count_}; }
  std::uint64_t size() const { return count_; }

 private:
  LatticeSpec spec_;
  std::uint64_t count_;
};

inline constexpr std::size_t kMaxEnumeratedElements = 30;

// Throws SizeError when element_count > kMaxEnumeratedElements.
ConfigurationRange enumerate_configurations(const LatticeSpec& spec);

// Compact binary form, all fields little-endian:
//   u8 kind | u32 cols | u32 rows | u64 seed | f64 density (IEEE-754 bits)
//   then ceil(element_count / 8) bytes of occupancy, element i at bit (i % 8)
//   of byte (i / 8).
void write_binary(const Configuration& config, std::ostream& out);
Configuration read_binary(std::istream& in);

}  // namespace percweb
