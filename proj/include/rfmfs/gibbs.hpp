#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "rfmfs/fields.hpp"
#include "rfmfs/quadrature.hpp"
#include "rfmfs/rng.hpp"
#include "rfmfs/tilting.hpp"

namespace rfmfs {

// Smallest volume for which the mixture representation is used.
inline constexpr long long kMinVolume = 5;

// Window grid adapted to the peaks of the mixture density: a radial band
// and mirrored angular windows around every local maximum, with node
// spacing of half the narrowest peak width. Falls back to a full-disk grid
// when the peaks are too wide for windows to pay off.
std::shared_ptr<const QuadratureGrid> mixture_grid(long long n, const ModelParams& params,
                                                   const FieldStats& stats);

// Mixing density rho_n on the unit disk, with unnormalized log-density
//   2 beta J x^2 + 4 beta <m_n, z> + (n - 4) psi_n(z).
// Normalizer, half-disk masses and first moments are computed once at
// construction. Copies share state.
class MixtureDensity {
 public:
  MixtureDensity(long long n, const ModelParams& params, const FieldStats& stats,
                 std::shared_ptr<const QuadratureGrid> grid = nullptr);

  long long n() const;
  const ModelParams& params() const;
  const FieldStats& stats() const;
  const QuadratureGrid& grid() const;

  double log_density_unnormalized(const DiskPoint& z) const;
  // log Z_n.
  double log_norm() const;
  // log of the unnormalized mass of a region.
  double log_mass(Region region) const;
  double w_plus() const;
  // E x and E y under rho_n (or its restriction to a half-disk).
  double mean_x(Region region = Region::full) const;
  double mean_y(Region region = Region::full) const;

  // Quadrature expectation of f under rho_n restricted to a region, over
  // nodes within `cutoff` nats of the top.
  double expectation(const std::function<double(const DiskPoint&)>& f,
                     Region region = Region::full, double cutoff = 40.0) const;

  // Grid inverse-CDF draw with uniform jitter inside the node's polar cell.
  DiskPoint sample(RngStream& rng, Region region = Region::full) const;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

double log_partition(long long n, const ModelParams& params, const FieldStats& stats);

struct Weights {
  double w_plus = 0.5;
  double w_minus = 0.5;
  double log_plus = 0.0;
  double log_minus = 0.0;
  long long n = 0;
  ModelParams params;
  FieldStats stats;
};

Weights weight_plus(long long n, const ModelParams& params, const FieldStats& stats);

DiskPoint sample_mixture(const MixtureDensity& density, RngStream& rng,
                         Region region = Region::full);

// Values of a configuration on a finite set of coordinates (0-based,
// sorted, distinct).
struct SpinMarginal {
  std::vector<std::size_t> indices;
  std::vector<double> values;

  // Value at coordinate i; throws IndexError when i is not in the set.
  double at(std::size_t i) const;
};

std::vector<std::size_t> normalize_index_set(std::vector<std::size_t> indices);

// Microcanonical sampler nu_n^{z,h}: pushes a standard Gaussian vector
// through the transport map onto the (n-2)-sphere slice
//   sum phi_i^2 = n, sum phi_i = n x, <h_n, phi> = n (m_par x + m_perp y).
// The two field directions are orthonormalized once at construction.
class MicroSampler {
 public:
  MicroSampler(const FieldSample& field, long long n);

  long long n() const { return n_; }
  const FieldStats& stats() const { return stats_; }

  // Full configuration phi in R^n.
  void draw(const DiskPoint& z, RngStream& rng, std::vector<double>& phi) const;
  SpinMarginal draw(const DiskPoint& z, std::span<const std::size_t> index_set,
                    RngStream& rng) const;

 private:
  long long n_;
  FieldStats stats_;
  std::vector<double> e1_;  // all-ones direction, unit norm
  std::vector<double> e2_;  // centred field direction, unit norm
  std::vector<double> u_;   // (h_i - m_par) / m_perp
  mutable std::vector<double> scratch_;
};

SpinMarginal sample_micro(const DiskPoint& z, const FieldSample& field, long long n,
                          std::span<const std::size_t> index_set, RngStream& rng);

struct GaussianMoments {
  double mean = 0.0;
  double variance = 1.0;
};

// Coordinate i (0-based) under nu_infinity^{z,h}.
GaussianMoments limit_state_moments(const DiskPoint& z, const FieldSample& field,
                                    const FieldPair& m, std::size_t i);

SpinMarginal sample_limit_state(const DiskPoint& z, const FieldSample& field, const FieldPair& m,
                                std::span<const std::size_t> index_set, RngStream& rng);

struct Estimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

using TestFunction = std::function<double(const SpinMarginal&)>;

// Monte Carlo estimate of mu_n[f] (or of the conditioned state on a
// half-disk) by drawing z from rho_n and phi from nu_n^{z,h}.
Estimate gibbs_expectation(const TestFunction& f, std::span<const std::size_t> index_set,
                           long long n, const ModelParams& params, const FieldSample& field,
                           std::size_t samples, RngStream& rng, Region region = Region::full);

// Same, reusing a prepared density and sampler.
Estimate gibbs_expectation(const TestFunction& f, std::span<const std::size_t> index_set,
                           const MixtureDensity& density, const MicroSampler& micro,
                           std::size_t samples, RngStream& rng, Region region = Region::full);

double magnetization_density(long long n, const ModelParams& params, const FieldStats& stats);

// tanh(sum_i a_i phi_i + b) over a finite set of coordinates.
struct TanhObservable {
  std::vector<std::pair<std::size_t, double>> terms;
  double offset = 0.0;

  double operator()(const SpinMarginal& phi) const;
  std::vector<std::size_t> support() const;
  // Value under a product Gaussian with the given per-coordinate moments.
  double gaussian_expectation(const std::function<GaussianMoments(std::size_t)>& moments) const;
};

using Dictionary = std::vector<TanhObservable>;

// Fixed dictionary on coordinates 0..3.
const Dictionary& default_dictionary();
std::vector<std::size_t> dictionary_support(const Dictionary& dictionary);

// E tanh(mu + sd G) for standard Gaussian G.
double gaussian_tanh_expectation(double mu, double sd);

}  // namespace rfmfs
