#include <doctest.h>

#include <cmath>
#include <vector>

#include "rfmfs/errors.hpp"
#include "rfmfs/fields.hpp"
#include "rfmfs/rng.hpp"
#include "rfmfs/tilting.hpp"

using namespace rfmfs;

namespace {

// Brute-force maximization of psi on a square grid restricted to the disk,
// followed by a local refinement on a finer grid around the best node.
DiskPoint grid_argmax(const ModelParams& p, const FieldPair& m, int points, double x_lo = -1.0) {
  double best = -1e300;
  DiskPoint arg{0, 0};
  const double step = 2.0 / points;
  for (int i = 0; i < points; ++i)
    for (int j = 0; j < points; ++j) {
      const DiskPoint z{-1.0 + (i + 0.5) * step, -1.0 + (j + 0.5) * step};
      if (z.x < x_lo || z.norm2() >= 1.0) continue;
      const double v = psi(z, p, m);
      if (v > best) best = v, arg = z;
    }
  return arg;
}

double fd_step(double v) { return 1e-6 * std::max(1.0, std::abs(v)); }

}  // namespace

TEST_CASE("psi examples") {
  const ModelParams p{1.0, 2.0};
  const FieldPair m{0.0, 1.0};
  CHECK(psi({0, 0}, {0.3, 5.0}, {0.7, 0.2}) == 0.0);
  CHECK(psi({0.5, 0.5}, p, m) == doctest::Approx(0.25 + 0.5 + 0.5 * std::log(0.5)).epsilon(1e-14));
  CHECK(psi({0.5, 0.5}, p, m) == doctest::Approx(0.40343).epsilon(1e-5));
  CHECK(psi({0.3, -0.2}, p, m) == psi({-0.3, -0.2}, p, m));
  CHECK_THROWS_AS(psi({0.8, 0.6}, p, m), DomainError);
  CHECK_THROWS_AS(psi({1.2, 0.0}, p, m), DomainError);
}

TEST_CASE("psi_n examples and uniform gap bound") {
  const ModelParams p{1.0, 2.0};
  const FieldPair m{0.0, 1.0};
  CHECK(psi_n({0.4, 0.1}, p, {0.0, 1.0, 10}) == psi({0.4, 0.1}, p, m));
  CHECK(psi_n({0, 0}, p, {0.1, 1.0, 10}) == 0.0);
  const FieldStats st{0.03, 0.96, 100};
  const double bound = p.beta * std::hypot(st.m_par - m.par, st.m_perp - m.perp);
  RngStream rng(3, 0);
  for (int k = 0; k < 1000; ++k) {
    const double r = std::sqrt(rng.uniform()) * 0.999, t = 6.283185307179586 * rng.uniform();
    const DiskPoint z{r * std::cos(t), r * std::sin(t)};
    CHECK(std::abs(psi_n(z, p, st) - psi(z, p, m)) <= bound + 1e-15);
  }
}

TEST_CASE("gradient and Hessian examples") {
  const ModelParams p{1.0, 2.0};
  const FieldPair m{0.0, 1.0};
  const Eigen::Matrix2d h = hess_psi({0.5, 0.5}, p, m);
  CHECK(h(0, 0) == doctest::Approx(-2.0));
  CHECK(h(0, 1) == doctest::Approx(-2.0));
  CHECK(h(1, 0) == doctest::Approx(-2.0));
  CHECK(h(1, 1) == doctest::Approx(-4.0));
  const double bj = p.beta * p.J, q = m.perp / p.J;
  CHECK(h.determinant() == doctest::Approx(2 * bj * bj * (bj * (1 - q * q) - 1)));
  CHECK(h.determinant() == doctest::Approx(4.0));
  for (const FieldPair mm : {m, FieldPair{0.2, 1.0}, FieldPair{-0.4, 0.5}, FieldPair{0.0, 3.0}}) {
    const auto ms = maximizers(p, mm);
    for (const DiskPoint& z : ms.points()) CHECK(grad_psi(z, p, mm).norm() < 1e-8);
  }
}

TEST_CASE("gradient and Hessian agree with finite differences") {
  RngStream rng(17, 0);
  for (int k = 0; k < 1000; ++k) {
    const ModelParams p{0.2 + 2.0 * rng.uniform(), 0.2 + 3.0 * rng.uniform()};
    const FieldPair m{2.0 * rng.uniform() - 1.0, 0.1 + 2.0 * rng.uniform()};
    const double r = 0.95 * std::sqrt(rng.uniform()), t = 6.283185307179586 * rng.uniform();
    const DiskPoint z{r * std::cos(t), r * std::sin(t)};
    const Eigen::Vector2d g = grad_psi(z, p, m);
    const Eigen::Matrix2d h = hess_psi(z, p, m);
    const double hx = fd_step(z.x), hy = fd_step(z.y);
    const Eigen::Vector2d fd_g((psi({z.x + hx, z.y}, p, m) - psi({z.x - hx, z.y}, p, m)) / (2 * hx),
                               (psi({z.x, z.y + hy}, p, m) - psi({z.x, z.y - hy}, p, m)) / (2 * hy));
    Eigen::Matrix2d fd_h;
    fd_h.col(0) = (grad_psi({z.x + hx, z.y}, p, m) - grad_psi({z.x - hx, z.y}, p, m)) / (2 * hx);
    fd_h.col(1) = (grad_psi({z.x, z.y + hy}, p, m) - grad_psi({z.x, z.y - hy}, p, m)) / (2 * hy);
    CHECK((g - fd_g).norm() <= 1e-5 * std::max(1.0, g.norm()));
    CHECK((h - fd_h).norm() <= 1e-5 * std::max(1.0, h.norm()));
    CHECK(h(0, 1) == h(1, 0));
  }
}

TEST_CASE("beta_critical") {
  CHECK(*beta_critical(2.0, 1.0) == doctest::Approx(2.0 / 3.0));
  CHECK_FALSE(beta_critical(2.0, 2.0).has_value());
  CHECK_FALSE(beta_critical(1.0, 1.5).has_value());
  CHECK(*beta_critical(1.0, 0.5) == doctest::Approx(4.0 / 3.0));
  CHECK_THROWS_AS(beta_critical(0.0, 1.0), ParameterError);
  CHECK_THROWS_AS(beta_critical(1.0, -1.0), ParameterError);
  // H11 at the one-point maximizer vanishes at beta_c.
  const double bc = *beta_critical(2.0, 1.0);
  const ModelParams p{bc, 2.0};
  const DiskPoint z0 = maximizers(p, {0.0, 1.0}).single();
  CHECK(std::abs(hess_psi(z0, p, {0.0, 1.0})(0, 0)) < 1e-9);
}

TEST_CASE("maximizers: closed forms and grid oracle") {
  const FieldPair m{0.0, 1.0};
  const auto two = maximizers({1.0, 2.0}, m);
  REQUIRE(two.is_two());
  CHECK(two.plus().x == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(two.plus().y == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(two.minus().x == -two.plus().x);
  CHECK(two.minus().y == two.plus().y);
  CHECK(psi(two.plus(), {1.0, 2.0}, m) == doctest::Approx(psi(two.minus(), {1.0, 2.0}, m)).epsilon(1e-12));
  CHECK_THROWS_AS(two.single(), PhaseError);
  const DiskPoint gp = grid_argmax({1.0, 2.0}, m, 1000, 0.0);
  CHECK(distance(gp, two.plus()) < 2.0 * 2.0 / 1000);

  const auto one = maximizers({0.5, 2.0}, m);
  REQUIRE_FALSE(one.is_two());
  CHECK(one.single().x == 0.0);
  CHECK(one.single().y == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-12));
  CHECK_THROWS_AS(one.plus(), PhaseError);
  CHECK(distance(grid_argmax({0.5, 2.0}, m, 1000), one.single()) < 4.0 / 1000);

  const auto tilted = maximizers({1.0, 2.0}, {0.1, 1.0});
  REQUIRE_FALSE(tilted.is_two());
  CHECK(tilted.single().x > 0.0);
  CHECK(distance(grid_argmax({1.0, 2.0}, {0.1, 1.0}, 1000), tilted.single()) < 4.0 / 1000);
  const auto neg = maximizers({1.0, 2.0}, {-0.1, 1.0});
  CHECK(neg.single().x == doctest::Approx(-tilted.single().x).epsilon(1e-12));

  CHECK_THROWS_AS(maximizers({1.0, 2.0}, {0.0, 0.0}), DegenerateFieldError);
  CHECK_THROWS_AS(maximizers({1.0, 2.0}, {0.1, -1.0}), DegenerateFieldError);
}

TEST_CASE("critical equation for a tilted field has exactly one root in (0, 1)") {
  const ModelParams p{1.0, 2.0};
  const FieldPair m{0.1, 1.0};
  int changes = 0;
  double prev = critical_x_equation(1e-9, p, m);
  for (int k = 1; k <= 100000; ++k) {
    const double x = 1e-9 + (1.0 - 2e-9) * k / 100000.0;
    const double v = critical_x_equation(x, p, m);
    changes += (v > 0) != (prev > 0);
    prev = v;
  }
  CHECK(changes == 1);
  const DiskPoint z = maximizers(p, m).single();
  CHECK(std::abs(critical_x_equation(z.x, p, m)) < 1e-10);
  CHECK(critical_y(z.x, p, m) == doctest::Approx(z.y).epsilon(1e-12));
}

TEST_CASE("psi decays strictly towards the boundary") {
  for (const ModelParams p : {ModelParams{1.0, 2.0}, ModelParams{0.5, 2.0}, ModelParams{3.0, 1.0}})
    for (const FieldPair m : {FieldPair{0.0, 1.0}, FieldPair{0.3, 0.7}}) {
      const auto ms = maximizers(p, m);
      const double top = psi(ms.points()[0], p, m);
      double r_max = 0.0;
      for (const auto& z : ms.points()) r_max = std::max(r_max, z.norm());
      // Find R with the maximizers inside and psi < top - 1 on the ring of radius R.
      bool found = false;
      for (double R = r_max + 0.001; R < 1.0 && !found; R += 0.001) {
        bool below = true;
        for (int k = 0; k < 1000 && below; ++k) {
          const double t = 6.283185307179586 * k / 1000.0;
          below = psi({R * std::cos(t), R * std::sin(t)}, p, m) < top - 1.0;
        }
        found = below;
      }
      CHECK(found);
    }
}

TEST_CASE("x+ shrinks to zero as beta decreases to beta_c") {
  const double bc = 2.0 / 3.0;
  double prev = 1.0;
  for (double beta = 1.5; beta > bc; beta = bc + 0.7 * (beta - bc)) {
    const auto ms = maximizers({beta, 2.0}, {0.0, 1.0});
    REQUIRE(ms.is_two());
    CHECK(ms.plus().x < prev);
    prev = ms.plus().x;
    if (beta - bc < 1e-8) break;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("phase classification") {
  CHECK(classify_phase({1.0, 2.0}, DistributionSpec::parse("gaussian:0.3:1")) == Phase::OrderedFerromagnet);
  CHECK(classify_phase({0.5, 2.0}, DistributionSpec::parse("rademacher:1")) == Phase::OrderedParamagnet);
  CHECK(classify_phase({1.0, 2.0}, DistributionSpec::parse("rademacher:1")) == Phase::SpinGlass);
  CHECK(classify_phase({5.0, 1.0}, DistributionSpec::parse("gaussian:0:1")) == Phase::OrderedParamagnet);
  CHECK(classify_phase({5.0, 2.0}, FieldPair{0.0, 2.0}) == Phase::OrderedParamagnet);
  CHECK_THROWS_AS(classify_phase({1.0, 2.0}, DistributionSpec::parse("bernoulli:1:1:0")), AssumptionError);
  CHECK(to_string(Phase::SpinGlass) == "SpinGlass");
}
