#pragma once

#include <cmath>

namespace rfmfs {

// A point z = (x, y) of the open unit disk. x is the magnetization
// coordinate along the all-ones direction, y the coordinate along the
// centred field direction.
struct DiskPoint {
  double x = 0.0;
  double y = 0.0;

  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
  bool inside() const { return norm2() < 1.0; }

  friend bool operator==(const DiskPoint&, const DiskPoint&) = default;
};

inline double distance(const DiskPoint& a, const DiskPoint& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// The pair (m_par, m_perp): mean and standard deviation of the external
// field, either a finite-sample value or its limit.
struct FieldPair {
  double par = 0.0;
  double perp = 0.0;

  friend bool operator==(const FieldPair&, const FieldPair&) = default;
};

}  // namespace rfmfs
