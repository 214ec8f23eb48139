#include "rfmfs/quadrature.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

namespace rfmfs {

const char* to_string(Region region) {
  switch (region) {
    case Region::full:
      return "full";
    case Region::half_plus:
      return "half_plus";
    case Region::half_minus:
      return "half_minus";
  }
  return "?";
}

void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights) {
  if (count < 1) throw ParameterError("gauss_legendre: node count must be positive");
  nodes.assign(count, 0.0);
  weights.assign(count, 0.0);
  const int half = (count + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_count
    double t = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = t;
      for (int k = 2; k <= count; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = count * (t * p1 - p0) / (t * t - 1.0);
      const double step = p1 / dp;
      t -= step;
      if (std::abs(step) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0;
    double p1 = t;
    for (int k = 2; k <= count; ++k) {
      const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = count == 1 ? 1.0 : count * (t * p1 - p0) / (t * t - 1.0);
    const double w = 2.0 / ((1.0 - t * t) * dp * dp);
    nodes[i] = -t;
    nodes[count - 1 - i] = t;
    weights[i] = w;
    weights[count - 1 - i] = w;
  }
  if (count % 2 == 1) nodes[count / 2] = 0.0;
}

QuadratureGrid::QuadratureGrid(int radial_nodes, int angular_nodes, double r_lo, double r_hi,
                               std::vector<AngularRange> windows) {
  if (radial_nodes < 1 || angular_nodes < 1)
    throw ParameterError("QuadratureGrid: node counts must be positive");
  if (!(r_lo >= 0.0 && r_lo < r_hi && r_hi <= 1.0))
    throw ParameterError("QuadratureGrid: need 0 <= r_lo < r_hi <= 1");
  const int m = (angular_nodes + 3) / 4 * 4;
  const int q = m / 4;

  std::vector<double> t;
  std::vector<double> w;
  gauss_legendre(radial_nodes, t, w);
  const double half_len = 0.5 * (r_hi - r_lo);
  const double mid = 0.5 * (r_hi + r_lo);
  radii_.resize(radial_nodes);
  radial_weights_.resize(radial_nodes);
  for (int i = 0; i < radial_nodes; ++i) {
    radii_[i] = mid + half_len * t[i];
    radial_weights_[i] = half_len * w[i] * radii_[i];
  }
  radial_bounds_.resize(radial_nodes + 1);
  radial_bounds_.front() = r_lo;
  radial_bounds_.back() = r_hi;
  for (int i = 1; i < radial_nodes; ++i) radial_bounds_[i] = 0.5 * (radii_[i - 1] + radii_[i]);

  // First quadrant is computed, the rest by exact reflections.
  cos_.resize(m);
  sin_.resize(m);
  const double h = 2.0 * std::numbers::pi / m;
  for (int j = 0; j < q; ++j) {
    const double th = (j + 0.5) * h;
    cos_[j] = std::cos(th);
    sin_[j] = std::sin(th);
  }
  for (int j = q; j < 2 * q; ++j) {
    const int k = 2 * q - 1 - j;
    cos_[j] = -cos_[k];
    sin_[j] = sin_[k];
  }
  for (int j = 2 * q; j < m; ++j) {
    cos_[j] = -cos_[j - 2 * q];
    sin_[j] = -sin_[j - 2 * q];
  }
  angular_weight_ = h;

  // Half-plane index k maps to lattice index (k + 3q) mod m.
  std::vector<char> chosen(2 * q, windows.empty() ? 1 : 0);
  for (auto [first, last] : windows) {
    first = std::clamp(first, 0, 2 * q);
    last = std::clamp(last, 0, 2 * q);
    for (int k = first; k < last; ++k) chosen[k] = 1;
  }
  for (int k = 0; k < 2 * q; ++k)
    if (chosen[k]) plus_.push_back((k + 3 * q) % m);
  if (plus_.empty()) throw ParameterError("QuadratureGrid: empty angular window");
  for (int j : plus_) minus_.push_back(((2 * q - 1 - j) % m + m) % m);
  full_ = plus_;
  full_.insert(full_.end(), minus_.begin(), minus_.end());
  covers_disk_ = r_lo == 0.0 && r_hi == 1.0 && static_cast<int>(plus_.size()) == 2 * q;
}

double QuadratureGrid::theta(int j) const { return (j + 0.5) * angular_weight_; }

std::span<const int> QuadratureGrid::angular_indices(Region region) const {
  switch (region) {
    case Region::half_plus:
      return plus_;
    case Region::half_minus:
      return minus_;
    case Region::full:
      break;
  }
  return full_;
}

std::pair<double, double> QuadratureGrid::radial_cell(int i) const {
  return {radial_bounds_.at(i), radial_bounds_.at(i + 1)};
}

std::vector<QuadratureNode> QuadratureGrid::nodes(Region region) const {
  std::vector<QuadratureNode> out;
  const auto idx = angular_indices(region);
  out.reserve(radii_.size() * idx.size());
  for (std::size_t i = 0; i < radii_.size(); ++i)
    for (int j : idx)
      out.push_back({{radii_[i] * cos_[j], radii_[i] * sin_[j]}, radial_weights_[i] * angular_weight_});
  return out;
}

std::shared_ptr<const QuadratureGrid> QuadratureGrid::default_grid() {
  static const auto grid = std::make_shared<const QuadratureGrid>();
  return grid;
}

namespace detail {

void throw_bad_node(int i, int j, double x, double y, double value) {
  std::ostringstream os;
  os << "integration: non-finite integrand " << value << " at node (ring " << i << ", angle " << j
     << ") z = (" << x << ", " << y << ")";
  throw IntegrationError(os.str());
}

}  // namespace detail

}  // namespace rfmfs
