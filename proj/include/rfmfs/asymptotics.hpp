#pragma once

#include <Eigen/Dense>

#include "rfmfs/fields.hpp"
#include "rfmfs/quadrature.hpp"
#include "rfmfs/tilting.hpp"

namespace rfmfs {

struct MaximizerTrack {
  long long n = 0;
  DiskPoint z_n;
  DiskPoint z_star;
  double grad_residual = 0.0;
};

// Local maximizer of psi_n reached by Newton's method from z_star.
// Throws ConvergenceError when Newton fails or lands in the other half-disk.
MaximizerTrack track_maximizer(long long n, const ModelParams& params, const FieldStats& stats,
                               const DiskPoint& z_star);

// -beta H^{-1}(z*) (m_n - m).
Eigen::Vector2d predicted_shift(const FieldStats& stats, const FieldPair& m,
                                const DiskPoint& z_star, const ModelParams& params);

// beta <m_n - m, z*> - (beta^2 / 2) <m_n - m, H^{-1}(z*) (m_n - m)>.
double psi_diff_prediction(const FieldStats& stats, const FieldPair& m, const DiskPoint& z_star,
                           const ModelParams& params);

struct LaplaceRatio {
  double ratio = 0.0;
  // (1 - |z*|^2)^{-2} 2 pi / sqrt(det(-H(z*))).
  double limit = 0.0;
  MaximizerTrack track;
};

// n * (mass of the mixture on `half`) / exp(n psi_n(z_n)), with z_n the
// maximizer tracked from z_star.
LaplaceRatio laplace_ratio(long long n, const ModelParams& params, const FieldStats& stats,
                           const DiskPoint& z_star, Region half);

// Limit of W_n^+ under m_n = m + gamma n^{-delta} in the two-point phase:
// 1(gamma_par > 0) for delta < 1, logistic(2 beta x+ gamma_par) at
// delta = 1, and 1/2 for delta > 1. Throws ParameterError for delta < 1
// with gamma_par = 0, where the limit is not determined.
double weight_limit(double delta, const FieldPair& gamma, const ModelParams& params,
                    const MaximizerSet& maximizers);

}  // namespace rfmfs
