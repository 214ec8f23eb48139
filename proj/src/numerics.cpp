#include "rfmfs/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "rfmfs/errors.hpp"

namespace rfmfs {

double find_root_1d(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(lo < hi)) throw ParameterError("find_root_1d: need lo < hi");
  double a = lo;
  double b = hi;
  double fa = f(a);
  double fb = f(b);
  if (!std::isfinite(fa) || !std::isfinite(fb))
    throw DomainError("find_root_1d: F is not finite at the bracket ends");
  if (std::abs(fa) <= tol) return a;
  if (std::abs(fb) <= tol) return b;
  if ((fa > 0) == (fb > 0)) {
    std::ostringstream os;
    os << "find_root_1d: no sign change on [" << lo << ", " << hi << "] (F = " << fa << ", " << fb
       << ")";
    throw ParameterError(os.str());
  }

  double width = b - a;
  for (int iter = 0; iter < 400; ++iter) {
    double x = b - fb * (b - a) / (fb - fa);
    const double mid = 0.5 * (a + b);
    // Fall back to bisection when the secant leaves the bracket or the
    // previous step failed to halve it.
    if (!(x > a && x < b) || (b - a) > 0.5 * width) x = mid;
    width = b - a;
    const double fx = f(x);
    if (!std::isfinite(fx)) throw DomainError("find_root_1d: F is not finite inside the bracket");
    if (std::abs(fx) <= tol) return x;
    if ((fx > 0) == (fa > 0)) {
      a = x;
      fa = fx;
    } else {
      b = x;
      fb = fx;
    }
    if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b)))
      break;
  }
  return std::abs(fa) < std::abs(fb) ? a : b;
}

DiskPoint newton_2d(const Gradient2& grad, const Hessian2& hess, DiskPoint z0, double tol,
                    int max_iter) {
  if (!z0.inside()) throw DomainError("newton_2d: start point outside the open unit disk");
  DiskPoint z = z0;
  Eigen::Vector2d g = grad(z);
  double residual = g.norm();
  for (int iter = 0; iter < max_iter; ++iter) {
    if (residual <= tol) return z;
    const Eigen::Matrix2d h = hess(z);
    const double det = h.determinant();
    const Eigen::Vector2d step =
        det != 0.0 ? Eigen::Vector2d(-h.inverse() * g) : Eigen::Vector2d::Constant(NAN);
    if (!step.allFinite())
      throw ConvergenceError("newton_2d: singular Hessian", z.x, z.y, residual);

    double t = 1.0;
    bool moved = false;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      const DiskPoint cand{z.x + t * step.x(), z.y + t * step.y()};
      if (!cand.inside()) continue;
      const Eigen::Vector2d gc = grad(cand);
      if (!gc.allFinite()) continue;
      z = cand;
      g = gc;
      residual = g.norm();
      moved = true;
      break;
    }
    if (!moved) throw ConvergenceError("newton_2d: step halving failed", z.x, z.y, residual);
  }
  if (residual <= tol) return z;
  std::ostringstream os;
  os << "newton_2d: no convergence after " << max_iter << " iterations (residual " << residual
     << ")";
  throw ConvergenceError(os.str(), z.x, z.y, residual);
}

double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw ParameterError("ks_distance: no samples");
  std::vector<double> s(samples.begin(), samples.end());
  for (double v : s)
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("ks_distance: sample outside [0, 1]");
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double arcsine_cdf(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return std::asin(2.0 * x - 1.0) / std::numbers::pi + 0.5;
}

}  // namespace rfmfs
