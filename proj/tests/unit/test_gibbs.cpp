#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "rfmfs/errors.hpp"
#include "rfmfs/fields.hpp"
#include "rfmfs/gibbs.hpp"
#include "rfmfs/numerics.hpp"
#include "rfmfs/quadrature.hpp"
#include "rfmfs/tilting.hpp"

using namespace rfmfs;

namespace {

const ModelParams kMs{1.0, 2.0};  // two-point range for m = (0, 1)
const ModelParams kPs{0.5, 2.0};  // one-point range for m = (0, 1)

// Log of the unfolded integrand: exp(n beta J x^2 / 2 + n beta <m, z>) (1 - |z|^2)^((n-4)/2).
double direct_log_integrand(const DiskPoint& z, long long n, const ModelParams& p, const FieldStats& s) {
  const double nd = static_cast<double>(n);
  return nd * p.beta * p.J * z.x * z.x / 2 + nd * p.beta * (s.m_par * z.x + s.m_perp * z.y) +
         0.5 * (nd - 4) * std::log1p(-z.norm2());
}

FieldSample alternating(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i % 2 ? -1.0 : 1.0;
  return FieldSample::deterministic(std::move(v), std::array<double, 2>{0.0, 1.0});
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("partition function against the unfolded integrand") {
  const FieldStats st{0.0, 1.0, 10};
  const auto& grid = *QuadratureGrid::default_grid();
  const double direct = log_integral_disk([&](const DiskPoint& z) { return direct_log_integrand(z, 10, kMs, st); }, grid);
  const double folded = MixtureDensity(10, kMs, st, QuadratureGrid::default_grid()).log_norm();
  CHECK(std::abs(folded - direct) <= 1e-10 * std::abs(direct));
  CHECK(log_partition(10, kMs, st) == doctest::Approx(direct).epsilon(1e-9));
  const FieldStats tilted{0.3, 0.8, 10};
  const double d2 = log_integral_disk([&](const DiskPoint& z) { return direct_log_integrand(z, 10, kMs, tilted); }, grid);
  CHECK(log_partition(10, kMs, tilted) == doctest::Approx(d2).epsilon(1e-9));
}

TEST_CASE("adaptive grids agree with a fine full-disk grid") {
  const QuadratureGrid fine(2048, 2048);
  for (long long n : {50LL, 400LL, 3000LL})
    for (const FieldStats st : {FieldStats{0.0, 1.0, 0}, FieldStats{0.01, 0.97, 0}, FieldStats{-0.2, 1.3, 0}}) {
      const double direct = log_integral_disk([&](const DiskPoint& z) { return direct_log_integrand(z, n, kMs, st); }, fine);
      CAPTURE(n);
      CAPTURE(st.m_par);
      CHECK(log_partition(n, kMs, st) == doctest::Approx(direct).epsilon(1e-9));
    }
}

TEST_CASE("free energy approaches sup psi") {
  const FieldStats st{0.0, 1.0, 0};
  const double sup = psi({0.5, 0.5}, kMs, {0.0, 1.0});
  double prev = 1e9;
  for (long long n : {250LL, 1000LL, 4000LL}) {
    const double err = std::abs(log_partition(n, kMs, st) / n - sup);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev <= 0.01);
}

TEST_CASE("vanishing couplings reduce to the radial closed form") {
  for (long long n : {5LL, 12LL, 300LL}) {
    const double got = log_partition(n, {1e-12, 1e-12}, {0.0, 1.0, n});
    // n = 5 has a square-root edge at the boundary, which Gauss-Legendre resolves less well.
    CHECK(got == doctest::Approx(std::log(2 * std::numbers::pi / (n - 2))).epsilon(n == 5 ? 1e-6 : 1e-10));
  }
}

TEST_CASE("normalization of the mixture density") {
  const QuadratureGrid fine(1024, 1024);
  for (long long n : {20LL, 200LL}) {
    const MixtureDensity rho(n, kMs, {0.05, 1.0, n});
    const double mass = integrate_disk(
        [&](const DiskPoint& z) { return std::exp(rho.log_density_unnormalized(z) - rho.log_norm()); }, fine);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rho.expectation([](const DiskPoint&) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("weights") {
  for (long long n : {5LL, 100LL, 10000LL}) {
    const auto w = weight_plus(n, kMs, {0.0, 1.0, n});
    CHECK(std::abs(w.w_plus - 0.5) <= 1e-9);
    CHECK(w.w_plus + w.w_minus == doctest::Approx(1.0).epsilon(1e-15));
  }
  const auto s1 = StatsSchedule::parse("0:1:1:0:1");
  const auto w1 = weight_plus(10000, kMs, schedule_stats(s1, 10000));
  CHECK(std::abs(w1.w_plus - 1.0 / (1.0 + std::exp(-1.0))) <= 0.02);
  const auto w05 = weight_plus(10000, kMs, schedule_stats(StatsSchedule::parse("0:1:1:0:0.5"), 10000));
  CHECK(w05.w_plus >= 0.99);
  // h -> -h mirrors the weights.
  const auto a = weight_plus(700, kMs, {0.01, 1.1, 700});
  const auto b = weight_plus(700, kMs, {-0.01, 1.1, 700});
  CHECK(a.w_plus == doctest::Approx(b.w_minus).epsilon(1e-12));
  CHECK_THROWS_AS(weight_plus(4, kMs, {0.0, 1.0, 4}), ParameterError);
  CHECK_THROWS_AS(weight_plus(10, kMs, {0.0, 0.0, 10}), DegenerateFieldError);
}

TEST_CASE("mixture sampling concentrates on the maximizers") {
  RngStream rng(21, 0);
  const MixtureDensity ps(4000, kPs, {0.0, 1.0, 4000});
  double mx = 0.0, my = 0.0;
  const int count = 4000;
  for (int k = 0; k < count; ++k) {
    const DiskPoint z = sample_mixture(ps, rng);
    CHECK(z.norm2() < 1.0);
    mx += z.x / count;
    my += z.y / count;
  }
  CHECK(std::abs(mx) < 0.05);
  CHECK(std::abs(my - (std::sqrt(2.0) - 1.0)) < 0.05);

  const MixtureDensity ms(4000, kMs, {1e-3, 1.0, 4000});
  int near = 0;
  for (int k = 0; k < count; ++k) near += distance(sample_mixture(ms, rng), {0.5, 0.5}) < 0.1;
  CHECK(near >= 0.95 * count);
  for (int k = 0; k < 500; ++k) CHECK(sample_mixture(ms, rng, Region::half_minus).x < 0.0);
}

TEST_CASE("mixture sampler matches quadrature moments") {
  RngStream rng(22, 0);
  const MixtureDensity rho(60, kMs, {0.02, 1.0, 60});
  const int count = 40000;
  double mx = 0.0, mx2 = 0.0;
  for (int k = 0; k < count; ++k) {
    const DiskPoint z = rho.sample(rng);
    mx += z.x;
    mx2 += z.x * z.x;
  }
  mx /= count;
  const double sd = std::sqrt(mx2 / count - mx * mx);
  CHECK(std::abs(mx - rho.mean_x()) < 4 * sd / std::sqrt(double(count)));
}

TEST_CASE("microcanonical draws satisfy the spherical constraint exactly") {
  RngStream frng(23, 0);
  const auto field = sample_field(DistributionSpec::parse("gaussian:0.2:1.5"), 600, frng);
  const long long n = 500;
  const MicroSampler micro(field, n);
  const auto st = field_stats(field, n);
  RngStream rng(24, 0);
  std::vector<double> phi;
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double r = 0.99 * std::sqrt(rng.uniform()), t = 2 * std::numbers::pi * rng.uniform();
    const DiskPoint z{r * std::cos(t), r * std::sin(t)};
    micro.draw(z, rng, phi);
    REQUIRE(phi.size() == static_cast<std::size_t>(n));
    double s2 = 0.0, s1 = 0.0, sh = 0.0;
    for (long long i = 0; i < n; ++i) {
      s2 += phi[i] * phi[i];
      s1 += phi[i];
      sh += field.value(i) * phi[i];
    }
    worst = std::max(worst, std::abs(s2 / n - 1.0));
    CHECK(s1 == doctest::Approx(n * z.x).epsilon(1e-9).scale(n));
    CHECK(sh == doctest::Approx(n * (st.m_par * z.x + st.m_perp * z.y)).epsilon(1e-9).scale(n));
  }
  CHECK(worst <= 1e-9);

  const std::vector<std::size_t> idx{4, 1, 4, 7};
  const auto marginal = sample_micro({0.1, 0.2}, field, n, idx, rng);
  CHECK(marginal.indices == std::vector<std::size_t>{1, 4, 7});
  CHECK_THROWS_AS(marginal.at(2), IndexError);
  const std::vector<std::size_t> bad{600};
  CHECK_THROWS_AS(sample_micro({0.1, 0.2}, field, n, bad, rng), IndexError);
  CHECK_THROWS_AS(MicroSampler(FieldSample::deterministic(std::vector<double>(10, 1.0)), 10),
                  DegenerateFieldError);
}

TEST_CASE("limit state moments and sampler") {
  const auto one = FieldSample::deterministic({1.0, -1.0, 1.0});
  const FieldPair m{0.0, 1.0};
  auto g = limit_state_moments({0, 0}, one, m, 0);
  CHECK(g.mean == 0.0);
  CHECK(g.variance == 1.0);
  g = limit_state_moments({0.5, 0.5}, one, m, 0);
  CHECK(g.mean == doctest::Approx(1.0));
  CHECK(g.variance == doctest::Approx(0.5));
  CHECK(limit_state_moments({0.3, 0.2}, one, m, 1).mean == doctest::Approx(0.3 - 0.2));
  // Negating the field flips the y-term of the mean.
  const auto neg = FieldSample::deterministic({-1.0, 1.0, -1.0});
  CHECK(limit_state_moments({0.3, 0.2}, neg, m, 0).mean == doctest::Approx(0.3 - 0.2));
  CHECK_THROWS_AS(limit_state_moments({0.3, 0.2}, one, {0.0, 0.0}, 0), DegenerateFieldError);

  RngStream rng(25, 0);
  const std::vector<std::size_t> idx{0, 1, 2};
  const DiskPoint z{0.4, 0.3};
  double s = 0.0, s2 = 0.0;
  std::vector<double> eta;
  const int count = 10000;
  for (int k = 0; k < count; ++k) {
    const auto v = sample_limit_state(z, one, m, idx, rng).at(1);
    s += v;
    s2 += v * v;
    eta.push_back(sample_limit_state({0, 0}, one, m, idx, rng).at(2));
  }
  const double var = s2 / count - (s / count) * (s / count);
  CHECK(var == doctest::Approx(1 - z.norm2()).epsilon(0.05));
  for (auto& v : eta) v = normal_cdf(v);
  CHECK(ks_distance(eta, [](double u) { return u; }) <= 0.02);
}

TEST_CASE("Gibbs expectations") {
  const auto field = alternating(4000);
  RngStream rng(26, 0);
  const std::vector<std::size_t> idx{0};
  const auto one = gibbs_expectation([](const SpinMarginal&) { return 1.0; }, idx, 4000, kPs, field, 50, rng);
  CHECK(one.mean == 1.0);
  CHECK(one.standard_error == 0.0);
  const auto t = gibbs_expectation([](const SpinMarginal& p) { return std::tanh(p.at(0)); }, idx, 1000, kMs,
                                   field, 200, rng);
  CHECK(t.mean >= -1.0);
  CHECK(t.mean <= 1.0);

  // phi_0 in the one-point range against its limiting mean.
  const auto est = gibbs_expectation([](const SpinMarginal& p) { return p.at(0); }, idx, 4000, kPs, field, 4000, rng);
  const DiskPoint z0 = maximizers(kPs, {0.0, 1.0}).single();
  const double limit = limit_state_moments(z0, field, {0.0, 1.0}, 0).mean;
  CHECK(std::abs(est.mean - limit) <= 3 * est.standard_error);
}

TEST_CASE("magnetization density") {
  CHECK(std::abs(magnetization_density(500, kMs, {0.0, 1.0, 500})) < 1e-12);
  const FieldPair m{0.3, 1.0};
  const double x_star = maximizers({1.0, 2.0}, m).single().x;
  const double mag = magnetization_density(4000, {1.0, 2.0}, {0.3, 1.0, 4000});
  CHECK(std::abs(mag - x_star) <= 0.02);
  CHECK(std::abs(mag) < 1.0);
}

TEST_CASE("conditioned decomposition reproduces the unconditioned estimate") {
  const auto field = alternating(800);
  const long long n = 800;
  const MicroSampler micro(field, n);
  const MixtureDensity rho(n, kMs, {0.004, 1.0, n});
  const std::vector<std::size_t> idx{0, 1};
  const auto f = [](const SpinMarginal& p) { return std::tanh(p.at(0) + 0.5 * p.at(1)); };
  RngStream rng(27, 0);
  const auto full = gibbs_expectation(f, idx, rho, micro, 20000, rng);
  const auto plus = gibbs_expectation(f, idx, rho, micro, 20000, rng, Region::half_plus);
  const auto minus = gibbs_expectation(f, idx, rho, micro, 20000, rng, Region::half_minus);
  const double w = rho.w_plus();
  CHECK(w > 0.6);
  const double combined = w * plus.mean + (1 - w) * minus.mean;
  const double se = std::sqrt(full.standard_error * full.standard_error +
                              w * w * plus.standard_error * plus.standard_error +
                              (1 - w) * (1 - w) * minus.standard_error * minus.standard_error);
  CHECK(std::abs(combined - full.mean) <= 3 * se);
}

TEST_CASE("conditioned states converge to the limiting Gaussian states") {
  // E^{+-}[phi_i] = int rho_n^{+-}(z) (x + y u_i) is exact for the transport
  // sampler, so the gap to x+- + y+- u_i is deterministic.
  const auto field = alternating(8000);
  const FieldPair m{0.0, 1.0};
  const auto ms = maximizers(kMs, m);
  for (Region half : {Region::half_plus, Region::half_minus}) {
    const DiskPoint target = half == Region::half_plus ? ms.plus() : ms.minus();
    double prev = 1e9;
    for (long long n : {500LL, 2000LL, 8000LL}) {
      const MixtureDensity rho(n, kMs, field_stats(field, n));
      const double u0 = 1.0;  // (h_0 - m_par) / m_perp
      const double conditioned = rho.mean_x(half) + rho.mean_y(half) * u0;
      const double gap = std::abs(conditioned - limit_state_moments(target, field, m, 0).mean);
      CHECK(gap < prev);
      prev = gap;
    }
    CHECK(prev < 1e-3);
  }
  // Monte Carlo agrees with the exact conditioned mean at one volume.
  const long long n = 2000;
  const MixtureDensity rho(n, kMs, field_stats(field, n));
  const MicroSampler micro(field, n);
  RngStream rng(28, 0);
  const std::vector<std::size_t> idx{0};
  const auto est = gibbs_expectation([](const SpinMarginal& p) { return p.at(0); }, idx, rho, micro, 20000, rng,
                                     Region::half_plus);
  CHECK(std::abs(est.mean - (rho.mean_x(Region::half_plus) + rho.mean_y(Region::half_plus))) <=
        3 * est.standard_error);
}

TEST_CASE("tanh observables") {
  CHECK(gaussian_tanh_expectation(0.0, 1.3) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(gaussian_tanh_expectation(0.7, 0.0) == doctest::Approx(std::tanh(0.7)).epsilon(1e-15));
  CHECK(gaussian_tanh_expectation(0.7, 1.0) == doctest::Approx(-gaussian_tanh_expectation(-0.7, 1.0)));
  // Monte Carlo oracle.
  RngStream rng(29, 0);
  double acc = 0.0;
  const int count = 200000;
  for (int k = 0; k < count; ++k) acc += std::tanh(0.4 + 0.8 * rng.normal());
  CHECK(gaussian_tanh_expectation(0.4, 0.8) == doctest::Approx(acc / count).epsilon(0.01));
  const auto& dict = default_dictionary();
  CHECK(dictionary_support(dict) == std::vector<std::size_t>{0, 1, 2, 3});
  const TanhObservable zero{{{0, 0.0}}, 0.0};
  CHECK(zero(SpinMarginal{{0}, {3.0}}) == 0.0);
}
