#include "rfmfs/asymptotics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "rfmfs/errors.hpp"
#include "rfmfs/gibbs.hpp"
#include "rfmfs/numerics.hpp"

namespace rfmfs {

namespace {

Eigen::Matrix2d checked_inverse_hessian(const DiskPoint& z_star, const ModelParams& params) {
  const Eigen::Matrix2d h = hess_psi(z_star, params, {});
  const double det = h.determinant();
  if (!(std::abs(det) > 1e-14 * std::max(1.0, h.cwiseAbs().maxCoeff())))
    throw ParameterError("Hessian of psi is singular at z*");
  return h.inverse();
}

}  // namespace

MaximizerTrack track_maximizer(long long n, const ModelParams& params, const FieldStats& stats,
                               const DiskPoint& z_star) {
  params.validate();
  const FieldPair m = stats.pair();
  const auto grad = [&](const DiskPoint& z) { return grad_psi(z, params, m); };
  const auto hess = [&](const DiskPoint& z) { return hess_psi(z, params, m); };
  const DiskPoint z = newton_2d(grad, hess, z_star, 1e-12, kDefaultMaxIter);
  MaximizerTrack t{n, z, z_star, grad(z).norm()};
  if ((z_star.x > 0.0 && z.x <= 0.0) || (z_star.x < 0.0 && z.x >= 0.0)) {
    std::ostringstream os;
    os << "track_maximizer: Newton left the half-disk of z* (landed at x = " << z.x << ")";
    throw ConvergenceError(os.str(), z.x, z.y, t.grad_residual);
  }
  return t;
}

Eigen::Vector2d predicted_shift(const FieldStats& stats, const FieldPair& m,
                                const DiskPoint& z_star, const ModelParams& params) {
  const Eigen::Matrix2d hinv = checked_inverse_hessian(z_star, params);
  const Eigen::Vector2d dm(stats.m_par - m.par, stats.m_perp - m.perp);
  return -params.beta * hinv * dm;
}

double psi_diff_prediction(const FieldStats& stats, const FieldPair& m, const DiskPoint& z_star,
                           const ModelParams& params) {
  const Eigen::Matrix2d hinv = checked_inverse_hessian(z_star, params);
  const Eigen::Vector2d dm(stats.m_par - m.par, stats.m_perp - m.perp);
  const Eigen::Vector2d zs(z_star.x, z_star.y);
  const double b = params.beta;
  return b * dm.dot(zs) - 0.5 * b * b * dm.dot(hinv * dm);
}

LaplaceRatio laplace_ratio(long long n, const ModelParams& params, const FieldStats& stats,
                           const DiskPoint& z_star, Region half) {
  LaplaceRatio out;
  out.track = track_maximizer(n, params, stats, z_star);
  const MixtureDensity rho(n, params, stats);
  const double nd = static_cast<double>(n);
  const double log_peak = nd * psi_n(out.track.z_n, params, stats);
  out.ratio = nd * std::exp(rho.log_mass(half) - log_peak);
  const Eigen::Matrix2d h = hess_psi(z_star, params, {});
  const double s = 1.0 - z_star.norm2();
  out.limit = 2.0 * std::numbers::pi / (s * s * std::sqrt((-h).determinant()));
  return out;
}

double weight_limit(double delta, const FieldPair& gamma, const ModelParams& params,
                    const MaximizerSet& maximizers) {
  if (!maximizers.is_two())
    throw PhaseError("weight_limit: defined only when the maximizer set has two points");
  if (!(delta >= 0.0) || !std::isfinite(delta))
    throw ParameterError("weight_limit: delta must be a nonnegative number");
  if (delta < 1.0) {
    if (gamma.par == 0.0)
      throw ParameterError(
          "weight_limit: undetermined regime (delta < 1 with gamma_par = 0 depends on "
          "higher-order terms of the field)");
    return gamma.par > 0.0 ? 1.0 : 0.0;
  }
  if (delta == 1.0) {
    const double t = 2.0 * params.beta * maximizers.plus().x * gamma.par;
    return 1.0 / (1.0 + std::exp(-t));
  }
  return 0.5;
}

}  // namespace rfmfs
