#include "rfmfs/gibbs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "rfmfs/errors.hpp"
#include "rfmfs/numerics.hpp"

namespace rfmfs {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_volume(long long n, const char* who) {
  if (n < kMinVolume) {
    std::ostringstream os;
    os << who << ": n = " << n << " but the mixture representation needs n >= " << kMinVolume;
    throw ParameterError(os.str());
  }
}

void check_stats(const FieldStats& stats, const char* who) {
  if (!std::isfinite(stats.m_par) || !std::isfinite(stats.m_perp))
    throw ParameterError(std::string(who) + ": field statistics must be finite");
  if (!(stats.m_perp > 0.0)) {
    std::ostringstream os;
    os << who << ": m_perp = " << stats.m_perp
       << " is not positive; the two-dimensional reduction is undefined";
    throw DegenerateFieldError(os.str());
  }
}

// log rho~_n = (n - 4) psi^{beta, J', m'} with J' = J n / (n - 4) and
// m' = m_n n / (n - 4): the prefactor folds into the tilting function.
struct Folded {
  double scale;  // n - 4
  ModelParams params;
  FieldPair m;
};

Folded fold(long long n, const ModelParams& params, const FieldStats& stats) {
  const double nn = static_cast<double>(n - 4);
  const double r = static_cast<double>(n) / nn;
  return {nn, {params.beta, params.J * r}, {stats.m_par * r, stats.m_perp * r}};
}

struct Peak {
  DiskPoint z;
  double value;         // folded psi at z
  Eigen::Matrix2d cov;  // (-H)^{-1}, infinite entries when degenerate
  double curvature;     // largest eigenvalue of -H
};

std::vector<Peak> local_maxima(const ModelParams& p, const FieldPair& m) {
  auto f = [&](double x) { return critical_x_equation(x, p, m); };
  constexpr int kScan = 4000;
  std::vector<double> xs;
  xs.reserve(kScan + 2);
  xs.push_back(-1.0 + 1e-9);
  for (int k = 1; k < kScan; ++k) xs.push_back(-1.0 + 2.0 * k / kScan);
  xs.push_back(1.0 - 1e-9);

  std::vector<double> roots;
  double fa = f(xs[0]);
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double fb = f(xs[k + 1]);
    if (fa == 0.0) {
      roots.push_back(xs[k]);
    } else if ((fa < 0.0) != (fb < 0.0) && fb != 0.0) {
      roots.push_back(find_root_1d(f, xs[k], xs[k + 1], 1e-13));
    }
    fa = fb;
  }

  std::vector<Peak> peaks;
  for (double x : roots) {
    const DiskPoint z{x, critical_y(x, p, m)};
    if (!z.inside()) continue;
    const Eigen::Matrix2d neg_h = -hess_psi(z, p, m);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(neg_h);
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(1);
    if (lo < -1e-9 * std::max(1.0, hi)) continue;  // saddle
    Peak pk{z, psi(z, p, m), Eigen::Matrix2d::Constant(std::numeric_limits<double>::infinity()), hi};
    if (lo > 1e-12 * hi) pk.cov = neg_h.inverse();
    peaks.push_back(pk);
  }
  return peaks;
}

std::shared_ptr<const QuadratureGrid> full_grid_with_spacing(double h) {
  constexpr double kMaxNodes = 1 << 15;
  const double r_need = std::min(std::ceil(0.5 * std::numbers::pi / h), kMaxNodes);
  const double a_need = std::min(std::ceil(2.0 * std::numbers::pi / h), kMaxNodes);
  const int radial = std::max(QuadratureGrid::kDefaultNodes, static_cast<int>(r_need));
  const int angular = std::max(QuadratureGrid::kDefaultNodes, static_cast<int>(a_need));
  return std::make_shared<const QuadratureGrid>(radial, angular);
}

}  // namespace

std::shared_ptr<const QuadratureGrid> mixture_grid(long long n, const ModelParams& params,
                                                   const FieldStats& stats) {
  check_volume(n, "mixture_grid");
  params.validate();
  check_stats(stats, "mixture_grid");
  const Folded fd = fold(n, params, stats);

  // Windows are mirrored anyway; solving with |m_par| makes the grid
  // identical for h and -h.
  auto peaks = local_maxima(fd.params, {std::abs(fd.m.par), fd.m.perp});
  if (peaks.empty()) return QuadratureGrid::default_grid();
  double top = kNegInf;
  for (const auto& p : peaks) top = std::max(top, p.value);
  // Peaks more than 80 nats below the top carry no mass worth resolving.
  std::erase_if(peaks, [&](const Peak& p) { return fd.scale * (top - p.value) > 80.0; });

  double curvature = 0.0;
  for (const auto& p : peaks) curvature = std::max(curvature, p.curvature);
  const double sigma = 1.0 / std::sqrt(fd.scale * curvature);
  // The default grid already resolves peaks this wide.
  if (sigma >= 0.04) return QuadratureGrid::default_grid();
  const double h = 0.5 * sigma;

  constexpr double kSpan = 70.0;    // nats covered by the window box
  constexpr double kMargin = 50.0;  // required drop at a window edge
  const double pi = std::numbers::pi;
  double widen = 1.5;
  for (int attempt = 0; attempt < 12; ++attempt, widen *= 1.6) {
    double r_lo = 1.0;
    double r_hi = 0.0;
    std::vector<std::pair<double, double>> arcs;  // right-half-plane angles
    bool whole_half = false;
    for (const auto& p : peaks) {
      const double r0 = p.z.norm();
      double th0 = std::atan2(p.z.y, p.z.x);
      if (p.z.x < 0.0) th0 = (th0 > 0.0 ? pi : -pi) - th0;
      const Eigen::Vector2d er(std::cos(th0), std::sin(th0));
      const Eigen::Vector2d et(-std::sin(th0), std::cos(th0));
      const double var_r = er.dot(p.cov * er);
      const double var_t = et.dot(p.cov * et);
      const double k = widen * std::sqrt(2.0 * kSpan / fd.scale);
      const double dr = std::isfinite(var_r) ? k * std::sqrt(var_r) : 2.0;
      const double dt = std::isfinite(var_t) && r0 > 0.0 ? k * std::sqrt(var_t) / r0 : 2.0 * pi;
      r_lo = std::min(r_lo, r0 - dr);
      r_hi = std::max(r_hi, r0 + dr);
      if (dt >= 0.5 * pi || r0 - dr <= 0.0) whole_half = true;
      arcs.emplace_back(th0 - dt, th0 + dt);
    }
    r_lo = std::max(0.0, r_lo);
    r_hi = std::min(1.0, r_hi);
    if (r_lo < 4.0 * h) r_lo = 0.0;
    if (r_hi > 1.0 - 4.0 * h) r_hi = 1.0;

    const int lattice = std::max(64, static_cast<int>(std::ceil(2.0 * pi * r_hi / h)) + 3) / 4 * 4;
    const int half = lattice / 2;
    const double ht = 2.0 * pi / lattice;
    std::vector<QuadratureGrid::AngularRange> windows;
    if (!whole_half) {
      for (auto [a, b] : arcs) {
        const int k0 = std::max(0, static_cast<int>(std::floor((a + 0.5 * pi) / ht)) - 1);
        const int k1 = std::min(half, static_cast<int>(std::ceil((b + 0.5 * pi) / ht)) + 1);
        if (k0 < k1) windows.emplace_back(k0, k1);
      }
    }
    if (windows.empty() && r_lo == 0.0 && r_hi == 1.0) return full_grid_with_spacing(h);
    const int radial =
        std::max(32, static_cast<int>(std::ceil(0.5 * pi * (r_hi - r_lo) / h)));
    auto grid = std::make_shared<const QuadratureGrid>(radial, lattice, r_lo, r_hi, windows);
    if (static_cast<std::size_t>(grid->angular_nodes()) * 2 > static_cast<std::size_t>(lattice) &&
        r_lo == 0.0 && r_hi == 1.0)
      return full_grid_with_spacing(h);

    // Every cut edge must sit far below the top of the density.
    const auto radii = grid->radii();
    const auto cs = grid->cos_theta();
    const auto sn = grid->sin_theta();
    auto low_enough = [&](double r, int j) {
      const DiskPoint z{r * cs[j], r * sn[j]};
      return fd.scale * (psi(z, fd.params, fd.m) - top) < -kMargin;
    };
    bool ok = true;
    const auto all = grid->angular_indices(Region::full);
    if (r_lo > 0.0)
      for (int j : all) ok = ok && low_enough(radii.front(), j);
    if (r_hi < 1.0)
      for (int j : all) ok = ok && low_enough(radii.back(), j);
    if (ok && !windows.empty()) {
      // Edges of the selected runs in the right half plane and their mirrors.
      std::vector<char> chosen(half, 0);
      for (auto [a, b] : windows)
        for (int k = a; k < b; ++k) chosen[k] = 1;
      const int q = lattice / 4;
      for (int k = 0; k < half && ok; ++k) {
        if (!chosen[k]) continue;
        const bool edge = (k > 0 && !chosen[k - 1]) || (k + 1 < half && !chosen[k + 1]);
        if (!edge) continue;
        const int j = (k + 3 * q) % lattice;
        const int jm = ((2 * q - 1 - j) % lattice + lattice) % lattice;
        for (double r : radii) ok = ok && low_enough(r, j) && low_enough(r, jm);
      }
    }
    if (ok) return grid;
  }
  return full_grid_with_spacing(h);
}

// ---------------------------------------------------------------------------

struct MixtureDensity::State {
  long long n = 0;
  ModelParams params;
  FieldStats stats;
  std::shared_ptr<const QuadratureGrid> grid;
  double ring_coef = 0.0;  // (n - 4) / 2
  double c_xx = 0.0;       // n beta J / 2
  double c_par = 0.0;      // n beta m_par
  double c_perp = 0.0;     // n beta m_perp

  std::vector<double> ring_base;
  // Per half (0 = plus, 1 = minus): max node value, scaled mass and
  // scaled first moments relative to that max.
  std::array<double, 2> vmax{kNegInf, kNegInf};
  std::array<double, 2> mass{0.0, 0.0};
  std::array<double, 2> sum_x{0.0, 0.0};
  std::array<double, 2> sum_y{0.0, 0.0};

  struct Table {
    std::once_flag once;
    std::vector<int> ring;
    std::vector<int> angle;
    std::vector<double> cdf;
  };
  std::array<Table, 3> tables;

  double node_value(std::size_t i, int j) const {
    const double r = grid->radii()[i];
    const double c = grid->cos_theta()[j];
    const double s = grid->sin_theta()[j];
    return ring_base[i] + c_xx * r * r * c * c + r * (c_par * c + c_perp * s);
  }

  double log_mass(int h) const {
    if (mass[h] <= 0.0) return kNegInf;
    return vmax[h] + std::log(mass[h] * grid->angular_weight());
  }

  const Table& table(Region region);
};

const MixtureDensity::State::Table& MixtureDensity::State::table(Region region) {
  auto& t = tables[static_cast<int>(region)];
  std::call_once(t.once, [&] {
    double top = vmax[0];
    if (region == Region::half_minus || (region == Region::full && vmax[1] > top)) top = vmax[1];
    const double floor = top - 40.0;
    const auto wr = grid->radial_weights();
    const auto idx = grid->angular_indices(region);
    double acc = 0.0;
    for (std::size_t i = 0; i < wr.size(); ++i) {
      if (ring_base[i] == kNegInf) continue;
      for (int j : idx) {
        const double v = node_value(i, j);
        if (v < floor) continue;
        acc += wr[i] * std::exp(v - top);
        t.ring.push_back(static_cast<int>(i));
        t.angle.push_back(j);
        t.cdf.push_back(acc);
      }
    }
    if (t.cdf.empty()) throw IntegrationError("sample_mixture: region carries no mass");
  });
  return t;
}

MixtureDensity::MixtureDensity(long long n, const ModelParams& params, const FieldStats& stats,
                               std::shared_ptr<const QuadratureGrid> grid)
    : state_(std::make_shared<State>()) {
  check_volume(n, "MixtureDensity");
  params.validate();
  check_stats(stats, "MixtureDensity");
  auto& s = *state_;
  s.n = n;
  s.params = params;
  s.stats = stats;
  s.grid = grid ? std::move(grid) : mixture_grid(n, params, stats);
  const double nd = static_cast<double>(n);
  s.ring_coef = 0.5 * static_cast<double>(n - 4);
  s.c_xx = 0.5 * nd * params.beta * params.J;
  s.c_par = nd * params.beta * stats.m_par;
  s.c_perp = nd * params.beta * stats.m_perp;

  const auto& g = *s.grid;
  const auto radii = g.radii();
  const auto wr = g.radial_weights();
  const auto cs = g.cos_theta();
  const auto sn = g.sin_theta();
  const std::array<std::span<const int>, 2> halves{g.angular_indices(Region::half_plus),
                                                   g.angular_indices(Region::half_minus)};
  const std::size_t rings = radii.size();
  s.ring_base.resize(rings);
  std::vector<std::array<double, 2>> ring_max(rings, {kNegInf, kNegInf});

  for (std::size_t i = 0; i < rings; ++i) {
    const double r = radii[i];
    const double base = s.ring_coef * std::log1p(-r * r);
    s.ring_base[i] = base;
    if (!std::isfinite(base)) {
      if (std::isnan(base) || base > 0.0) detail::throw_bad_node(static_cast<int>(i), -1, r, 0.0, base);
      continue;
    }
    const double a = s.c_xx * r * r;
    const double bp = s.c_par * r;
    const double bq = s.c_perp * r;
    for (int h = 0; h < 2; ++h) {
      double m = kNegInf;
      for (int j : halves[h]) {
        const double c = cs[j];
        const double v = base + a * c * c + bp * c + bq * sn[j];
        if (v > m) m = v;
      }
      if (std::isnan(m) || m == std::numeric_limits<double>::infinity())
        detail::throw_bad_node(static_cast<int>(i), -1, r, 0.0, m);
      ring_max[i][h] = m;
      s.vmax[h] = std::max(s.vmax[h], m);
    }
  }
  if (s.vmax[0] == kNegInf && s.vmax[1] == kNegInf)
    throw IntegrationError("MixtureDensity: empty mass (all nodes are -inf)");

  for (int h = 0; h < 2; ++h) {
    const double floor = s.vmax[h] - detail::kLogCutoff;
    double mass = 0.0;
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < rings; ++i) {
      if (ring_max[i][h] < floor) continue;
      const double r = radii[i];
      const double base = s.ring_base[i];
      const double a = s.c_xx * r * r;
      const double bp = s.c_par * r;
      const double bq = s.c_perp * r;
      double rm = 0.0;
      double rc = 0.0;
      double rs = 0.0;
      for (int j : halves[h]) {
        const double c = cs[j];
        const double v = base + a * c * c + bp * c + bq * sn[j];
        if (v < floor) continue;
        const double e = std::exp(v - s.vmax[h]);
        rm += e;
        rc += e * c;
        rs += e * sn[j];
      }
      mass += wr[i] * rm;
      sx += wr[i] * r * rc;
      sy += wr[i] * r * rs;
    }
    s.mass[h] = mass;
    s.sum_x[h] = sx;
    s.sum_y[h] = sy;
  }
}

long long MixtureDensity::n() const { return state_->n; }
const ModelParams& MixtureDensity::params() const { return state_->params; }
const FieldStats& MixtureDensity::stats() const { return state_->stats; }
const QuadratureGrid& MixtureDensity::grid() const { return *state_->grid; }

double MixtureDensity::log_density_unnormalized(const DiskPoint& z) const {
  const auto& s = *state_;
  if (!z.inside()) throw DomainError("MixtureDensity: z outside the open unit disk");
  return s.ring_coef * std::log1p(-z.norm2()) + s.c_xx * z.x * z.x + s.c_par * z.x +
         s.c_perp * z.y;
}

double MixtureDensity::log_mass(Region region) const {
  const auto& s = *state_;
  switch (region) {
    case Region::half_plus:
      return s.log_mass(0);
    case Region::half_minus:
      return s.log_mass(1);
    case Region::full:
      break;
  }
  const double a = s.log_mass(0);
  const double b = s.log_mass(1);
  const double top = std::max(a, b);
  return top + std::log(std::exp(a - top) + std::exp(b - top));
}

double MixtureDensity::log_norm() const { return log_mass(Region::full); }

double MixtureDensity::w_plus() const {
  const double a = log_mass(Region::half_plus);
  const double b = log_mass(Region::half_minus);
  if (a == kNegInf) return 0.0;
  if (b == kNegInf) return 1.0;
  return 1.0 / (1.0 + std::exp(b - a));
}

double MixtureDensity::mean_x(Region region) const {
  const auto& s = *state_;
  if (region == Region::half_plus) return s.sum_x[0] / s.mass[0];
  if (region == Region::half_minus) return s.sum_x[1] / s.mass[1];
  const double w = w_plus();
  double out = 0.0;
  if (w > 0.0) out += w * s.sum_x[0] / s.mass[0];
  if (w < 1.0) out += (1.0 - w) * s.sum_x[1] / s.mass[1];
  return out;
}

double MixtureDensity::mean_y(Region region) const {
  const auto& s = *state_;
  if (region == Region::half_plus) return s.sum_y[0] / s.mass[0];
  if (region == Region::half_minus) return s.sum_y[1] / s.mass[1];
  const double w = w_plus();
  double out = 0.0;
  if (w > 0.0) out += w * s.sum_y[0] / s.mass[0];
  if (w < 1.0) out += (1.0 - w) * s.sum_y[1] / s.mass[1];
  return out;
}

double MixtureDensity::expectation(const std::function<double(const DiskPoint&)>& f, Region region,
                                  double cutoff) const {
  auto& s = *state_;
  double top = s.vmax[0];
  if (region == Region::half_minus || (region == Region::full && s.vmax[1] > top)) top = s.vmax[1];
  const double floor = top - cutoff;
  const auto& g = *s.grid;
  const auto radii = g.radii();
  const auto wr = g.radial_weights();
  const auto idx = g.angular_indices(region);
  double mass = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (s.ring_base[i] == kNegInf) continue;
    for (int j : idx) {
      const double v = s.node_value(i, j);
      if (v < floor) continue;
      const double w = wr[i] * std::exp(v - top);
      const DiskPoint z{radii[i] * g.cos_theta()[j], radii[i] * g.sin_theta()[j]};
      const double fv = f(z);
      if (!std::isfinite(fv)) detail::throw_bad_node(static_cast<int>(i), j, z.x, z.y, fv);
      mass += w;
      acc += w * fv;
    }
  }
  if (!(mass > 0.0)) throw IntegrationError("MixtureDensity::expectation: region carries no mass");
  return acc / mass;
}

DiskPoint MixtureDensity::sample(RngStream& rng, Region region) const {
  const auto& t = state_->table(region);
  const double u = rng.uniform() * t.cdf.back();
  auto it = std::upper_bound(t.cdf.begin(), t.cdf.end(), u);
  if (it == t.cdf.end()) --it;
  const std::size_t k = static_cast<std::size_t>(it - t.cdf.begin());
  const auto& g = *state_->grid;
  const auto [lo, hi] = g.radial_cell(t.ring[k]);
  double r = std::sqrt(lo * lo + rng.uniform() * (hi * hi - lo * lo));
  r = std::min(r, std::nextafter(1.0, 0.0));
  const double th = g.theta(t.angle[k]) + (rng.uniform() - 0.5) * g.angular_weight();
  return {r * std::cos(th), r * std::sin(th)};
}

double log_partition(long long n, const ModelParams& params, const FieldStats& stats) {
  return MixtureDensity(n, params, stats).log_norm();
}

Weights weight_plus(long long n, const ModelParams& params, const FieldStats& stats) {
  const MixtureDensity rho(n, params, stats);
  Weights w;
  w.log_plus = rho.log_mass(Region::half_plus);
  w.log_minus = rho.log_mass(Region::half_minus);
  w.w_plus = rho.w_plus();
  w.w_minus = 1.0 - w.w_plus;
  w.n = n;
  w.params = params;
  w.stats = stats;
  return w;
}

DiskPoint sample_mixture(const MixtureDensity& density, RngStream& rng, Region region) {
  return density.sample(rng, region);
}

// ---------------------------------------------------------------------------

double SpinMarginal::at(std::size_t i) const {
  const auto it = std::lower_bound(indices.begin(), indices.end(), i);
  if (it == indices.end() || *it != i) {
    std::ostringstream os;
    os << "SpinMarginal: coordinate " << i << " is not in the index set";
    throw IndexError(os.str());
  }
  return values[static_cast<std::size_t>(it - indices.begin())];
}

std::vector<std::size_t> normalize_index_set(std::vector<std::size_t> indices) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  return indices;
}

MicroSampler::MicroSampler(const FieldSample& field, long long n) : n_(n) {
  check_volume(n, "MicroSampler");
  if (static_cast<std::size_t>(n) > field.size()) throw IndexError("MicroSampler: n exceeds the field length");
  stats_ = field_stats(field, static_cast<std::size_t>(n));
  check_stats(stats_, "MicroSampler");
  const std::size_t len = static_cast<std::size_t>(n);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  e1_.assign(len, inv_sqrt_n);
  u_.resize(len);
  e2_.resize(len);
  for (std::size_t i = 0; i < len; ++i) u_[i] = (field.value(i) - stats_.m_par) / stats_.m_perp;
  // Gram-Schmidt twice keeps the pair orthonormal to rounding.
  e2_ = u_;
  for (int pass = 0; pass < 2; ++pass) {
    double a = 0.0;
    for (std::size_t i = 0; i < len; ++i) a += e2_[i] * e1_[i];
    for (std::size_t i = 0; i < len; ++i) e2_[i] -= a * e1_[i];
  }
  double norm = 0.0;
  for (double v : e2_) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw DegenerateFieldError("MicroSampler: field direction is degenerate");
  for (double& v : e2_) v /= norm;
  scratch_.resize(len);
}

void MicroSampler::draw(const DiskPoint& z, RngStream& rng, std::vector<double>& phi) const {
  if (!z.inside()) throw DomainError("sample_micro: z outside the open unit disk");
  const std::size_t len = static_cast<std::size_t>(n_);
  auto& g = scratch_;
  double norm = 0.0;
  while (!(norm > 0.0)) {
    for (auto& v : g) v = rng.normal();
    for (int pass = 0; pass < 2; ++pass) {
      double a = 0.0;
      double b = 0.0;
      for (std::size_t i = 0; i < len; ++i) {
        a += g[i] * e1_[i];
        b += g[i] * e2_[i];
      }
      for (std::size_t i = 0; i < len; ++i) g[i] -= a * e1_[i] + b * e2_[i];
    }
    norm = 0.0;
    for (double v : g) norm += v * v;
    norm = std::sqrt(norm);
  }
  const double sn = std::sqrt(static_cast<double>(n_));
  const double cx = sn * z.x;
  const double cy = sn * z.y;
  const double cr = sn * std::sqrt(1.0 - z.norm2()) / norm;
  phi.resize(len);
  for (std::size_t i = 0; i < len; ++i) phi[i] = cx * e1_[i] + cy * e2_[i] + cr * g[i];
}

SpinMarginal MicroSampler::draw(const DiskPoint& z, std::span<const std::size_t> index_set,
                                RngStream& rng) const {
  for (std::size_t i : index_set)
    if (i >= static_cast<std::size_t>(n_)) throw IndexError("sample_micro: index outside [0, n)");
  std::vector<double> phi;
  draw(z, rng, phi);
  SpinMarginal out;
  out.indices = normalize_index_set({index_set.begin(), index_set.end()});
  out.values.reserve(out.indices.size());
  for (std::size_t i : out.indices) out.values.push_back(phi[i]);
  return out;
}

SpinMarginal sample_micro(const DiskPoint& z, const FieldSample& field, long long n,
                          std::span<const std::size_t> index_set, RngStream& rng) {
  return MicroSampler(field, n).draw(z, index_set, rng);
}

GaussianMoments limit_state_moments(const DiskPoint& z, const FieldSample& field,
                                    const FieldPair& m, std::size_t i) {
  if (!(m.perp > 0.0)) throw DegenerateFieldError("limit_state_moments: m_perp must be positive");
  if (!z.inside()) throw DomainError("limit_state_moments: z outside the open unit disk");
  if (i >= field.size()) throw IndexError("limit_state_moments: index beyond the field");
  return {z.x + z.y * (field.value(i) - m.par) / m.perp, 1.0 - z.norm2()};
}

SpinMarginal sample_limit_state(const DiskPoint& z, const FieldSample& field, const FieldPair& m,
                                std::span<const std::size_t> index_set, RngStream& rng) {
  SpinMarginal out;
  out.indices = normalize_index_set({index_set.begin(), index_set.end()});
  out.values.reserve(out.indices.size());
  for (std::size_t i : out.indices) {
    const auto mo = limit_state_moments(z, field, m, i);
    out.values.push_back(mo.mean + std::sqrt(mo.variance) * rng.normal());
  }
  return out;
}

Estimate gibbs_expectation(const TestFunction& f, std::span<const std::size_t> index_set,
                           const MixtureDensity& density, const MicroSampler& micro,
                           std::size_t samples, RngStream& rng, Region region) {
  if (samples < 1) throw ParameterError("gibbs_expectation: need at least one sample");
  if (density.n() != micro.n()) throw ParameterError("gibbs_expectation: volume mismatch");
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const DiskPoint z = density.sample(rng, region);
    const double v = f(micro.draw(z, index_set, rng));
    const double d = v - mean;
    mean += d / static_cast<double>(k + 1);
    m2 += d * (v - mean);
  }
  Estimate e;
  e.mean = mean;
  e.samples = samples;
  e.standard_error =
      samples > 1 ? std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples)) : 0.0;
  return e;
}

Estimate gibbs_expectation(const TestFunction& f, std::span<const std::size_t> index_set,
                           long long n, const ModelParams& params, const FieldSample& field,
                           std::size_t samples, RngStream& rng, Region region) {
  check_volume(n, "gibbs_expectation");
  if (static_cast<std::size_t>(n) > field.size()) throw IndexError("gibbs_expectation: n exceeds the field length");
  const MicroSampler micro(field, n);
  const MixtureDensity density(n, params, micro.stats());
  return gibbs_expectation(f, index_set, density, micro, samples, rng, region);
}

double magnetization_density(long long n, const ModelParams& params, const FieldStats& stats) {
  return MixtureDensity(n, params, stats).mean_x();
}

// ---------------------------------------------------------------------------

double gaussian_tanh_expectation(double mu, double sd) {
  if (sd == 0.0) return std::tanh(mu);
  if (!(sd > 0.0)) throw ParameterError("gaussian_tanh_expectation: sd must be nonnegative");
  static const auto rule = [] {
    std::vector<double> t;
    std::vector<double> w;
    gauss_legendre(256, t, w);
    constexpr double half = 10.0;
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] *= half;
      w[i] *= half * norm * std::exp(-0.5 * t[i] * t[i]);
    }
    return std::pair{t, w};
  }();
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.first.size(); ++i)
    acc += rule.second[i] * std::tanh(mu + sd * rule.first[i]);
  return acc;
}

double TanhObservable::operator()(const SpinMarginal& phi) const {
  double s = offset;
  for (const auto& [i, a] : terms) s += a * phi.at(i);
  return std::tanh(s);
}

std::vector<std::size_t> TanhObservable::support() const {
  std::vector<std::size_t> out;
  for (const auto& t : terms) out.push_back(t.first);
  return normalize_index_set(std::move(out));
}

double TanhObservable::gaussian_expectation(
    const std::function<GaussianMoments(std::size_t)>& moments) const {
  double mu = offset;
  double var = 0.0;
  for (const auto& [i, a] : terms) {
    const auto m = moments(i);
    mu += a * m.mean;
    var += a * a * m.variance;
  }
  return gaussian_tanh_expectation(mu, std::sqrt(var));
}

const Dictionary& default_dictionary() {
  static const Dictionary dict{
      {{{0, 1.0}}, 0.0},
      {{{1, 1.0}}, 0.0},
      {{{0, 0.5}, {1, 0.5}}, 0.0},
      {{{2, 1.0}, {3, -1.0}}, 0.0},
      {{{0, 1.0}}, 0.5},
      {{{1, 0.7}, {3, -0.3}}, -0.2},
  };
  return dict;
}

std::vector<std::size_t> dictionary_support(const Dictionary& dictionary) {
  std::vector<std::size_t> out;
  for (const auto& f : dictionary)
    for (const auto& t : f.terms) out.push_back(t.first);
  return normalize_index_set(std::move(out));
}

}  // namespace rfmfs
