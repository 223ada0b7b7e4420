// Common scalar and linear-algebra aliases used across the library.
#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace esense {

using Scalar = double;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using SpMat = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Axis-aligned box, the region of interest for lattice constructions.
struct Box2 {
  Vec2 lo{-1.0, -1.0};
  Vec2 hi{1.0, 1.0};

  double width(int axis) const { return hi[axis] - lo[axis]; }
  bool contains(const Vec2& x) const {
    return x[0] >= lo[0] && x[0] <= hi[0] && x[1] >= lo[1] && x[1] <= hi[1];
  }
  // Euclidean distance from x to the box (0 inside).
  double distance(const Vec2& x) const {
    const double dx = std::max({lo[0] - x[0], 0.0, x[0] - hi[0]});
    const double dy = std::max({lo[1] - x[1], 0.0, x[1] - hi[1]});
    return std::sqrt(dx * dx + dy * dy);
  }
};

}  // namespace esense
