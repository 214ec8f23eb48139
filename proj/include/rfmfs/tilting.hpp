#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rfmfs/fields.hpp"
#include "rfmfs/types.hpp"

namespace rfmfs {

struct ModelParams {
  double beta = 1.0;
  double J = 1.0;

  // Throws ParameterError unless beta > 0 and J > 0.
  void validate() const;
};

// psi(z) = (beta J / 2) x^2 + beta <m, z> + (1/2) log(1 - |z|^2).
double psi(const DiskPoint& z, const ModelParams& params, const FieldPair& m);
double psi_n(const DiskPoint& z, const ModelParams& params, const FieldStats& stats);

Eigen::Vector2d grad_psi(const DiskPoint& z, const ModelParams& params, const FieldPair& m);
Eigen::Matrix2d hess_psi(const DiskPoint& z, const ModelParams& params, const FieldPair& m);

// J / ((J - m_perp)(J + m_perp)) when m_perp < J, absent otherwise.
std::optional<double> beta_critical(double J, double m_perp);

// The scalar equation for the x coordinate of a critical point once y has
// been eliminated; defined on (-1, 1).
double critical_x_equation(double x, const ModelParams& params, const FieldPair& m);

// y coordinate of the critical point with given x.
double critical_y(double x, const ModelParams& params, const FieldPair& m);

// Global maximizers of psi: a single point, or a mirror pair z+ (x > 0)
// and z- = (-x+, y+).
class MaximizerSet {
 public:
  static MaximizerSet one(DiskPoint z);
  static MaximizerSet two(DiskPoint plus);

  bool is_two() const { return points_.size() == 2; }
  std::size_t size() const { return points_.size(); }
  std::span<const DiskPoint> points() const { return points_; }

  // One case only.
  const DiskPoint& single() const;
  // Two case only.
  const DiskPoint& plus() const;
  const DiskPoint& minus() const;

 private:
  std::vector<DiskPoint> points_;
};

MaximizerSet maximizers(const ModelParams& params, const FieldPair& m);

enum class Phase { OrderedFerromagnet, OrderedParamagnet, SpinGlass };

std::string to_string(Phase phase);

// Classification from the limit pair (E h, sqrt(Var h)).
Phase classify_phase(const ModelParams& params, const FieldPair& m);
// Throws AssumptionError when the law violates A1.
Phase classify_phase(const ModelParams& params, const DistributionSpec& spec);

}  // namespace rfmfs
