#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rfmfs/errors.hpp"
#include "rfmfs/types.hpp"

namespace rfmfs {

enum class Region { full, half_plus, half_minus };

const char* to_string(Region region);

struct QuadratureNode {
  DiskPoint z;
  double weight = 0.0;
};

// Tensor-product rule on the unit disk in polar coordinates:
// Gauss-Legendre in the radius (with the r Jacobian folded into the
// weights) times the midpoint trapezoid rule in the angle.
//
// Angular nodes live on the lattice theta_j = (j + 1/2) 2 pi / M with M a
// multiple of four, so no node lies on the line x = 0 and the two
// half-disks are exact mirror images of each other: the k-th node of
// half_plus and the k-th node of half_minus differ only in the sign of x,
// bit for bit.
//
// A grid may cover only a radial band [r_lo, r_hi] and a subset of the
// angular lattice (a window grid). Windows are chosen in the right half
// plane and always mirrored, so the mirror property holds for every grid.
// Window grids are exact only for integrands that are negligible on the
// excluded part of the disk.
class QuadratureGrid {
 public:
  static constexpr int kDefaultNodes = 256;

  // Half-plane angular index k in [0, M/2) stands for
  // theta = -pi/2 + (k + 1/2) 2 pi / M, i.e. the right half plane from
  // bottom to top.
  using AngularRange = std::pair<int, int>;  // [first, last)

  // angular_nodes is rounded up to a multiple of four. An empty
  // `windows` list selects the whole lattice.
  explicit QuadratureGrid(int radial_nodes = kDefaultNodes, int angular_nodes = kDefaultNodes,
                          double r_lo = 0.0, double r_hi = 1.0,
                          std::vector<AngularRange> windows = {});

  static std::shared_ptr<const QuadratureGrid> default_grid();

  int radial_nodes() const { return static_cast<int>(radii_.size()); }
  // Size M of the angular lattice.
  int angular_lattice() const { return static_cast<int>(cos_.size()); }
  // Number of selected angular nodes.
  int angular_nodes() const { return static_cast<int>(full_.size()); }
  std::size_t size() const { return radii_.size() * full_.size(); }
  bool covers_disk() const { return covers_disk_; }
  double r_lo() const { return radial_bounds_.front(); }
  double r_hi() const { return radial_bounds_.back(); }

  std::span<const double> radii() const { return radii_; }
  // Gauss-Legendre weight times r.
  std::span<const double> radial_weights() const { return radial_weights_; }
  // Indexed by lattice index j.
  std::span<const double> cos_theta() const { return cos_; }
  std::span<const double> sin_theta() const { return sin_; }
  double angular_weight() const { return angular_weight_; }
  double theta(int j) const;

  // Selected lattice indices belonging to a region; the half regions
  // list mirror-image nodes in the same order.
  std::span<const int> angular_indices(Region region) const;

  // Cell [lo, hi) around radial node i; cells tile [r_lo, r_hi].
  std::pair<double, double> radial_cell(int i) const;
  double angular_half_width() const { return 0.5 * angular_weight_; }

  std::vector<QuadratureNode> nodes(Region region = Region::full) const;

 private:
  std::vector<double> radii_;
  std::vector<double> radial_weights_;
  std::vector<double> radial_bounds_;
  std::vector<double> cos_;
  std::vector<double> sin_;
  std::vector<int> full_;
  std::vector<int> plus_;
  std::vector<int> minus_;
  double angular_weight_ = 0.0;
  bool covers_disk_ = true;
};

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights);

namespace detail {

[[noreturn]] void throw_bad_node(int i, int j, double x, double y, double value);

// Contributions below max - kLogCutoff are dropped; they are smaller than
// 1e-26 relative to the peak node.
inline constexpr double kLogCutoff = 60.0;

}  // namespace detail

// Weighted node sum of f over a region.
template <class F>
double integrate_disk(F&& f, const QuadratureGrid& grid, Region region = Region::full) {
  const auto radii = grid.radii();
  const auto wr = grid.radial_weights();
  const auto cs = grid.cos_theta();
  const auto sn = grid.sin_theta();
  const auto idx = grid.angular_indices(region);
  double total = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    double ring = 0.0;
    for (int j : idx) {
      const DiskPoint z{radii[i] * cs[j], radii[i] * sn[j]};
      const double v = f(z);
      if (!std::isfinite(v)) detail::throw_bad_node(static_cast<int>(i), j, z.x, z.y, v);
      ring += v;
    }
    total += wr[i] * ring;
  }
  return total * grid.angular_weight();
}

// log of the integral of exp(ring_term(i, r) + node_term(r, cos, sin)) over
// a region, evaluated as a log-sum-exp over the nodes. The split lets
// callers hoist purely radial work (e.g. log(1 - r^2)) out of the angular
// loop. Either term may be -inf; +inf and NaN are integration errors.
template <class RingTerm, class NodeTerm>
double log_integral_polar(const QuadratureGrid& grid, Region region, RingTerm&& ring_term,
                          NodeTerm&& node_term) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const auto radii = grid.radii();
  const auto wr = grid.radial_weights();
  const auto cs = grid.cos_theta();
  const auto sn = grid.sin_theta();
  const auto idx = grid.angular_indices(region);
  const std::size_t rings = radii.size();

  std::vector<double> ring_base(rings);
  std::vector<double> ring_max(rings, kNegInf);
  double global_max = kNegInf;
  for (std::size_t i = 0; i < rings; ++i) {
    const double r = radii[i];
    const double base = ring_term(static_cast<int>(i), r);
    ring_base[i] = base;
    if (std::isnan(base) || base == std::numeric_limits<double>::infinity())
      detail::throw_bad_node(static_cast<int>(i), -1, r, 0.0, base);
    if (base == kNegInf) continue;
    double m = kNegInf;
    for (int j : idx) {
      const double v = base + node_term(r, cs[j], sn[j]);
      if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
        detail::throw_bad_node(static_cast<int>(i), j, r * cs[j], r * sn[j], v);
      if (v > m) m = v;
    }
    ring_max[i] = m;
    if (m > global_max) global_max = m;
  }
  if (global_max == kNegInf) throw IntegrationError("log_integral: empty mass (all nodes are -inf)");

  const double floor = global_max - detail::kLogCutoff;
  double total = 0.0;
  for (std::size_t i = 0; i < rings; ++i) {
    if (ring_max[i] < floor) continue;
    const double r = radii[i];
    const double base = ring_base[i];
    double ring = 0.0;
    for (int j : idx) {
      const double v = base + node_term(r, cs[j], sn[j]);
      if (v >= floor) ring += std::exp(v - global_max);
    }
    total += wr[i] * ring;
  }
  return global_max + std::log(total * grid.angular_weight());
}

// log of the integral of exp(log_f) over a region (log-sum-exp over nodes).
template <class F>
double log_integral_disk(F&& log_f, const QuadratureGrid& grid, Region region = Region::full) {
  return log_integral_polar(
      grid, region, [](int, double) { return 0.0; },
      [&log_f](double r, double c, double s) { return log_f(DiskPoint{r * c, r * s}); });
}

}  // namespace rfmfs
