#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rfmfs/rng.hpp"
#include "rfmfs/types.hpp"

namespace rfmfs {

struct Rademacher {
  double scale = 1.0;
};
// Value a with probability p, b otherwise.
struct Bernoulli {
  double p = 0.5;
  double a = -1.0;
  double b = 1.0;
};
struct Gaussian {
  double mean = 0.0;
  double sd = 1.0;
};
struct Uniform {
  double lo = -1.0;
  double hi = 1.0;
};

// Law of a single field component h_0, with its first four raw moments
// carried in closed form.
class DistributionSpec {
 public:
  using Variant = std::variant<Rademacher, Bernoulli, Gaussian, Uniform>;

  explicit DistributionSpec(Variant law);

  // "rademacher:1", "bernoulli:p:a:b", "gaussian:mean:sd", "uniform:lo:hi".
  static DistributionSpec parse(std::string_view text);

  const Variant& law() const { return law_; }
  std::string to_string() const;

  // Raw moment E h^k for k = 1..4.
  double moment(int k) const { return moments_.at(k - 1); }
  double mean() const { return moments_[0]; }
  double variance() const { return moments_[1] - moments_[0] * moments_[0]; }
  // Largest xi with E|h|^(4 + xi) finite; infinite for every built-in law.
  double tail_exponent() const;

  bool satisfies_a1() const;
  bool satisfies_a2() const;
  // Whether the shifted walk's first coordinate has every real number as a
  // possible value. Declared per law: lattice laws do not.
  bool satisfies_a3() const;
  bool satisfies_a4() const { return tail_exponent() > 0.0; }

  // (E h, sqrt(Var h)).
  FieldPair limit() const;
  // Asymptotic covariance of sqrt(n)(m_n - m) by the delta method.
  Eigen::Matrix2d clt_covariance() const;

  double draw(RngStream& rng) const;

 private:
  Variant law_;
  std::array<double, 4> moments_{};
};

// Realized prefix h_1..h_n with running sums S_k = (sum h_i, sum h_i^2).
// Index k in the accessors below is the prefix length (1-based).
class FieldSample {
 public:
  // Explicit values; `limit_moments` = (E h, E h^2) when the field is meant
  // to represent a law with known moments.
  static FieldSample deterministic(std::vector<double> values,
                                   std::optional<std::array<double, 2>> limit_moments = {});

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double value(std::size_t i) const { return values_.at(i); }  // 0-based
  double sum1(std::size_t k) const;
  double sum2(std::size_t k) const;

  const std::optional<DistributionSpec>& spec() const { return spec_; }
  std::optional<std::uint64_t> seed() const { return seed_; }
  std::optional<std::uint64_t> stream_id() const { return stream_id_; }

  bool has_moments() const { return moments_.has_value(); }
  // (E h, E h^2); throws ParameterError when the field declares none.
  std::array<double, 2> limit_moments() const;
  // (E h, sqrt(Var h)).
  FieldPair limit() const;

  // Field c h with moments rescaled accordingly; the law tag is dropped.
  FieldSample scaled(double factor) const;

 private:
  friend FieldSample sample_field(const DistributionSpec&, std::size_t, RngStream&);
  FieldSample() = default;
  void build_walk();

  std::vector<double> values_;
  std::vector<double> s1_;
  std::vector<double> s2_;
  std::optional<DistributionSpec> spec_;
  std::optional<std::array<double, 2>> moments_;
  std::optional<std::uint64_t> seed_;
  std::optional<std::uint64_t> stream_id_;
};

struct FieldStats {
  double m_par = 0.0;
  double m_perp = 0.0;
  long long n = 0;

  FieldPair pair() const { return {m_par, m_perp}; }
};

// m_n = m + gamma n^(-delta), componentwise.
struct StatsSchedule {
  FieldPair m;
  FieldPair gamma;
  double delta = 0.0;

  // "m_par:m_perp:gamma_par:gamma_perp:delta"
  static StatsSchedule parse(std::string_view text);
};

FieldSample sample_field(const DistributionSpec& spec, std::size_t n, RngStream& rng);

FieldStats field_stats(const FieldSample& sample, std::size_t k);

FieldStats schedule_stats(const StatsSchedule& schedule, long long n);

// Shifted walk S'_k = (sum (h_i - E h), sum (h_i^2 - E h^2)).
std::pair<double, double> shifted_walk(const FieldSample& sample, std::size_t k);

// Fraction of n <= N with S_n > 0 (first coordinate).
double t_plus(const FieldSample& sample, std::size_t N);

// True iff both coordinates of m_n - m have magnitude in
// [n^(-1/2 - delta), n^(-1/2 + delta)]. Requires 0 < delta < 1/6.
bool conditioning_indicator(const FieldStats& stats, const FieldPair& m, long long n, double delta);

}  // namespace rfmfs
