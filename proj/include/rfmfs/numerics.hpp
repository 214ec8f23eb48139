#pragma once

#include <functional>
#include <span>

#include <Eigen/Dense>

#include "rfmfs/quadrature.hpp"
#include "rfmfs/rng.hpp"
#include "rfmfs/types.hpp"

namespace rfmfs {

inline constexpr double kDefaultTol = 1e-10;
inline constexpr int kDefaultMaxIter = 100;

// Root of a continuous F on [lo, hi] with F(lo) F(hi) < 0. Bisection
// safeguards a secant step; the bracket is preserved throughout. Returns x
// with |F(x)| <= tol, or the best bracketed point once the bracket has
// shrunk to machine precision.
double find_root_1d(const std::function<double(double)>& f, double lo, double hi,
                    double tol = kDefaultTol);

using Gradient2 = std::function<Eigen::Vector2d(const DiskPoint&)>;
using Hessian2 = std::function<Eigen::Matrix2d(const DiskPoint&)>;

// Newton iteration for grad = 0 inside the open unit disk. A step that
// would leave the disk (or not produce a finite point) is halved until it
// stays inside. Throws ConvergenceError with the last iterate when
// max_iter is exhausted or the Hessian is singular.
DiskPoint newton_2d(const Gradient2& grad, const Hessian2& hess, DiskPoint z0,
                    double tol = kDefaultTol, int max_iter = kDefaultMaxIter);

// Kolmogorov-Smirnov sup distance between the empirical CDF of samples in
// [0, 1] and a reference CDF.
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);

// CDF of the arcsine law on [0, 1].
double arcsine_cdf(double x);

}  // namespace rfmfs
