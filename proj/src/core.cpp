#include "percweb/core.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "percweb/error.hpp"

namespace percweb {

const char* to_string(LatticeKind kind) {
  return kind == LatticeKind::site ? "site" : "bond";
}

LatticeKind lattice_kind_from_string(const char* name) {
  const std::string s(name);
  if (s == "site") return LatticeKind::site;
  if (s == "bond") return LatticeKind::bond;
  throw InvalidArgument("unknown lattice kind '" + s + "' (expected site or bond)");
}

LatticeSpec::LatticeSpec(LatticeKind kind, int cols, int rows)
    : kind_(kind), cols_(cols), rows_(rows) {
  if (cols < 1 || rows < 1)
    throw InvalidArgument("lattice needs cols >= 1 and rows >= 1, got " + std::to_string(cols) +
                          "x" + std::to_string(rows));
  if (kind != LatticeKind::site && kind != LatticeKind::bond)
    throw InvalidArgument("invalid lattice kind");
}

bool LatticeSpec::is_phantom(std::size_t element) const {
  if (kind_ != LatticeKind::bond) return false;
  const std::size_t n = site_count();
  if (element < n) return static_cast<int>(element % cols_) == cols_ - 1;
  return static_cast<int>((element - n) / cols_) == rows_ - 1;
}

Configuration::Configuration(LatticeSpec spec, std::uint64_t seed, double density)
    : spec_(spec), seed_(seed), density_(density), words_((spec.element_count() + 63) / 64, 0) {}

std::size_t Configuration::count_occupied() const {
  std::size_t total = 0;
  for (auto w : words_) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

bool Configuration::passable(Site from, Site to) const {
  if (!spec_.contains(from) || !spec_.contains(to)) return false;
  if (spec_.kind() == LatticeKind::site)
    return occupied(spec_.site_index(from.x, from.y)) && occupied(spec_.site_index(to.x, to.y));
  if (to.y == from.y) {
    if (to.x == from.x + 1) return east_open(from.x, from.y);
    if (to.x == from.x - 1) return east_open(to.x, to.y);
  } else if (to.x == from.x) {
    if (to.y == from.y + 1) return north_open(from.x, from.y);
    if (to.y == from.y - 1) return north_open(to.x, to.y);
  }
  return false;
}

Configuration sample_configuration(const LatticeSpec& spec, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0))
    throw InvalidArgument("density must lie in [0, 1], got " + std::to_string(p));
  Configuration config(spec, seed, p);
  SplitMix64 rng(seed);
  const std::size_t n = spec.element_count();
  for (std::size_t i = 0; i < n; ++i)
    if (rng.uniform() < p) config.set(i, true);
  return config;
}

Configuration dual_configuration(const Configuration& config) {
  const LatticeSpec& spec = config.spec();
  if (spec.kind() != LatticeKind::bond)
    throw UnsupportedOperation("planar duality is only defined for bond configurations");
  const int cols = spec.cols();
  const int rows = spec.rows();
  if (cols < 2) throw InvalidArgument("dual lattice needs at least two primal columns");

  const LatticeSpec dual_spec(LatticeKind::bond, rows + 1, cols - 1);
  Configuration dual(dual_spec, config.seed(), 1.0 - config.density());
  for (int yd = 0; yd < dual_spec.rows(); ++yd) {
    for (int xd = 0; xd < dual_spec.cols(); ++xd) {
      // dual east bond crosses primal east bond of (cols-2-yd, xd)
      if (xd + 1 < dual_spec.cols())
        dual.set(dual_spec.east_bond(xd, yd), !config.east_open(cols - 2 - yd, xd));
      // dual north bond crosses primal north bond of (cols-2-yd, xd-1)
      if (yd + 1 < dual_spec.rows() && xd >= 1 && xd <= rows - 1)
        dual.set(dual_spec.north_bond(xd, yd), !config.north_open(cols - 2 - yd, xd - 1));
    }
  }
  return dual;
}

Configuration rotate_half_turn(const Configuration& config) {
  const LatticeSpec& spec = config.spec();
  const int cols = spec.cols();
  const int rows = spec.rows();
  Configuration out(spec, config.seed(), config.density());
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      if (spec.kind() == LatticeKind::site) {
        out.set(spec.site_index(cols - 1 - x, rows - 1 - y), config.occupied(spec.site_index(x, y)));
        continue;
      }
      if (x + 1 < cols) out.set(spec.east_bond(cols - 2 - x, rows - 1 - y), config.east_open(x, y));
      if (y + 1 < rows) out.set(spec.north_bond(cols - 1 - x, rows - 2 - y), config.north_open(x, y));
    }
  }
  return out;
}

bool crossing_relevant(const LatticeSpec& spec, std::size_t element) {
  if (spec.kind() != LatticeKind::bond) return true;
  if (spec.is_phantom(element)) return false;
  if (element < spec.site_count()) return true;
  const int x = static_cast<int>((element - spec.site_count()) % spec.cols());
  return x >= 1 && x <= spec.cols() - 2;
}

ConfigurationRange::ConfigurationRange(LatticeSpec spec)
    : spec_(spec), count_(std::uint64_t{1} << spec.element_count()) {}

Configuration ConfigurationRange::iterator::operator*() const {
  Configuration config(*spec_, pattern_, 0.5);
  const std::size_t n = spec_->element_count();
  for (std::size_t i = 0; i < n; ++i)
    if ((pattern_ >> (n - 1 - i)) & 1u) config.set(i, true);
  return config;
}

ConfigurationRange enumerate_configurations(const LatticeSpec& spec) {
  if (spec.element_count() > kMaxEnumeratedElements)
    throw SizeError("refusing to enumerate 2^" + std::to_string(spec.element_count()) +
                    " configurations (limit 2^" + std::to_string(kMaxEnumeratedElements) + ")");
  return ConfigurationRange(spec);
}

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(value >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T)))
    throw InvalidArgument("truncated configuration record");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(buf[i]) << (8 * i);
  return value;
}

}  // namespace

void write_binary(const Configuration& config, std::ostream& out) {
  const LatticeSpec& spec = config.spec();
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(spec.kind()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec.cols()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec.rows()));
  put_le<std::uint64_t>(out, config.seed());
  put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(config.density()));
  const std::size_t n = config.element_count();
  for (std::size_t byte = 0; byte < (n + 7) / 8; ++byte) {
    std::uint8_t v = 0;
    for (std::size_t bit = 0; bit < 8 && byte * 8 + bit < n; ++bit)
      if (config.occupied(byte * 8 + bit)) v |= static_cast<std::uint8_t>(1u << bit);
    put_le<std::uint8_t>(out, v);
  }
}

Configuration read_binary(std::istream& in) {
  const auto kind_raw = get_le<std::uint8_t>(in);
  if (kind_raw > 1) throw InvalidArgument("bad lattice kind byte in configuration record");
  const auto cols = get_le<std::uint32_t>(in);
  const auto rows = get_le<std::uint32_t>(in);
  const auto seed = get_le<std::uint64_t>(in);
  const auto density = std::bit_cast<double>(get_le<std::uint64_t>(in));
  Configuration config(LatticeSpec(static_cast<LatticeKind>(kind_raw), static_cast<int>(cols),
                                   static_cast<int>(rows)),
                       seed, density);
  const std::size_t n = config.element_count();
  for (std::size_t byte = 0; byte < (n + 7) / 8; ++byte) {
    const auto v = get_le<std::uint8_t>(in);
    for (std::size_t bit = 0; bit < 8 && byte * 8 + bit < n; ++bit)
      if ((v >> bit) & 1u) config.set(byte * 8 + bit, true);
  }
  return config;
}

}  // namespace percweb
