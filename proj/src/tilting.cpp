#include "rfmfs/tilting.hpp"

#include <cmath>
#include <sstream>

#include "rfmfs/errors.hpp"
#include "rfmfs/numerics.hpp"

namespace rfmfs {

namespace {

double one_minus_r2(const DiskPoint& z, const char* who) {
  const double s = 1.0 - z.norm2();
  if (!(s > 0.0)) {
    std::ostringstream os;
    os << who << ": z = (" << z.x << ", " << z.y << ") is outside the open unit disk";
    throw DomainError(os.str());
  }
  return s;
}

void require_strong(const FieldPair& m, const char* who) {
  if (!(m.perp > 0.0)) {
    std::ostringstream os;
    os << who << ": m_perp = " << m.perp << " is not positive (weakly varying field unsupported)";
    throw DegenerateFieldError(os.str());
  }
}

// sqrt(1 + a^2 - x^2) - a, written without cancellation for large a.
double root_gap(double x, double a) {
  const double s = std::sqrt(1.0 + a * a - x * x);
  return (1.0 - x * x) / (s + a);
}

}  // namespace

void ModelParams::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ParameterError("beta must be positive");
  if (!(J > 0.0) || !std::isfinite(J)) throw ParameterError("J must be positive");
}

double psi(const DiskPoint& z, const ModelParams& params, const FieldPair& m) {
  const double s = one_minus_r2(z, "psi");
  const double b = params.beta;
  return 0.5 * b * params.J * z.x * z.x + b * (m.par * z.x + m.perp * z.y) + 0.5 * std::log(s);
}

double psi_n(const DiskPoint& z, const ModelParams& params, const FieldStats& stats) {
  return psi(z, params, stats.pair());
}

Eigen::Vector2d grad_psi(const DiskPoint& z, const ModelParams& params, const FieldPair& m) {
  const double s = one_minus_r2(z, "grad_psi");
  const double b = params.beta;
  return {b * params.J * z.x + b * m.par - z.x / s, b * m.perp - z.y / s};
}

Eigen::Matrix2d hess_psi(const DiskPoint& z, const ModelParams& params, const FieldPair& m) {
  (void)m;
  const double s = one_minus_r2(z, "hess_psi");
  const double s2 = s * s;
  Eigen::Matrix2d h;
  h(0, 0) = params.beta * params.J - 1.0 / s - 2.0 * z.x * z.x / s2;
  h(0, 1) = -2.0 * z.x * z.y / s2;
  h(1, 0) = h(0, 1);
  h(1, 1) = -1.0 / s - 2.0 * z.y * z.y / s2;
  return h;
}

std::optional<double> beta_critical(double J, double m_perp) {
  if (!(J > 0.0) || !(m_perp > 0.0))
    throw ParameterError("beta_critical: J and m_perp must be positive");
  if (m_perp >= J) return std::nullopt;
  return J / ((J - m_perp) * (J + m_perp));
}

double critical_x_equation(double x, const ModelParams& params, const FieldPair& m) {
  require_strong(m, "critical_x_equation");
  if (!(std::abs(x) < 1.0)) throw DomainError("critical_x_equation: x must lie in (-1, 1)");
  const double b = params.beta;
  const double a = 1.0 / (2.0 * b * m.perp);
  return b * params.J * x + b * m.par - x / (2.0 * a * root_gap(x, a));
}

double critical_y(double x, const ModelParams& params, const FieldPair& m) {
  require_strong(m, "critical_y");
  const double a = 1.0 / (2.0 * params.beta * m.perp);
  return root_gap(x, a);
}

MaximizerSet MaximizerSet::one(DiskPoint z) {
  MaximizerSet s;
  s.points_ = {z};
  return s;
}

MaximizerSet MaximizerSet::two(DiskPoint plus) {
  MaximizerSet s;
  s.points_ = {plus, {-plus.x, plus.y}};
  return s;
}

const DiskPoint& MaximizerSet::single() const {
  if (is_two()) throw PhaseError("maximizer set has two points");
  return points_[0];
}

const DiskPoint& MaximizerSet::plus() const {
  if (!is_two()) throw PhaseError("maximizer set has a single point");
  return points_[0];
}

const DiskPoint& MaximizerSet::minus() const {
  if (!is_two()) throw PhaseError("maximizer set has a single point");
  return points_[1];
}

MaximizerSet maximizers(const ModelParams& params, const FieldPair& m) {
  params.validate();
  require_strong(m, "maximizers");
  const double b = params.beta;
  const double J = params.J;

  if (m.par != 0.0) {
    // F(0) = beta m_par and F -> -inf at the boundary, so the bracket on the
    // side of sign(m_par) holds exactly one root.
    constexpr double eps = 1e-9;
    const double sign = m.par > 0.0 ? 1.0 : -1.0;
    auto f = [&](double t) { return sign * critical_x_equation(sign * t, params, m); };
    const double t = find_root_1d(f, eps, 1.0 - eps, 1e-13);
    const double x = sign * t;
    return MaximizerSet::one({x, critical_y(x, params, m)});
  }

  const auto bc = beta_critical(J, m.perp);
  if (!bc || b <= *bc) return MaximizerSet::one({0.0, critical_y(0.0, params, m)});

  const double q = m.perp / J;
  const double x = std::sqrt(std::max(0.0, 1.0 - 1.0 / (b * J) - q * q));
  return MaximizerSet::two({x, q});
}

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::OrderedFerromagnet:
      return "OrderedFerromagnet";
    case Phase::OrderedParamagnet:
      return "OrderedParamagnet";
    case Phase::SpinGlass:
      return "SpinGlass";
  }
  return "?";
}

Phase classify_phase(const ModelParams& params, const FieldPair& m) {
  params.validate();
  require_strong(m, "classify_phase");
  if (m.par != 0.0) return Phase::OrderedFerromagnet;
  const auto bc = beta_critical(params.J, m.perp);
  if (!bc || params.beta <= *bc) return Phase::OrderedParamagnet;
  return Phase::SpinGlass;
}

Phase classify_phase(const ModelParams& params, const DistributionSpec& spec) {
  if (!spec.satisfies_a1())
    throw AssumptionError("classify_phase: " + spec.to_string() + " violates A1 (zero variance)");
  return classify_phase(params, spec.limit());
}

}  // namespace rfmfs
