// Parametric closed curves and their arclength discretization.
//
// All curves are parametrized counterclockwise over t in [0, 2pi). Meshes
// carry unit tangents, outward unit normals, signed curvature (positive for
// a counterclockwise-traversed convex boundary) and trapezoidal arclength
// quadrature weights, which are spectrally accurate on smooth closed curves.
#pragma once

#include <functional>

#include "esense/types.hpp"

namespace esense {

enum class ShapeKind { Disk, Ellipse, Flower, Custom };

struct ParametricShape {
  ShapeKind kind = ShapeKind::Disk;
  Vec2 center = Vec2::Zero();
  double rotation = 0.0;  // radians, about the center
  double scale = 1.0;     // global dilation about the center

  double radius = 1.0;           // disk and flower base radius
  double axis_a = 1.0;           // ellipse semi-axes
  double axis_b = 1.0;
  int petals = 5;                // flower: r(t) = radius * (1 + amp * cos(petals * t))
  double petal_amplitude = 0.3;  // |amp| < 1 keeps the radius positive

  // Custom closed curve in local coordinates (center/rotation/scale applied
  // on top). Derivatives are optional; missing ones fall back to finite
  // differences in the parameter.
  std::function<Vec2(double)> position;
  std::function<Vec2(double)> derivative;
  std::function<Vec2(double)> second_derivative;

  static ParametricShape disk(double r, const Vec2& c = Vec2::Zero());
  static ParametricShape ellipse(double a, double b, const Vec2& c = Vec2::Zero(),
                                 double rot = 0.0);
  static ParametricShape flower(double r, int petals, double amplitude,
                                const Vec2& c = Vec2::Zero(), double rot = 0.0);
  static ParametricShape custom(std::function<Vec2(double)> pos);

  Vec2 point(double t) const;
  Vec2 d1(double t) const;
  Vec2 d2(double t) const;
  // Radius of a circle about `center` guaranteed to contain the curve.
  double max_radius() const;
};

struct BoundaryMesh {
  Mat points;     // M x 2
  Mat tangents;   // M x 2, unit
  Mat normals;    // M x 2, unit, outward
  Vec curvature;  // signed, ccw convention
  Vec weights;    // arclength quadrature weights, sum = perimeter

  int size() const { return static_cast<int>(points.rows()); }
  Vec2 at(int i) const { return points.row(i).transpose(); }
  Vec2 normal(int i) const { return normals.row(i).transpose(); }
  double mesh_spacing() const { return weights.maxCoeff(); }
};

// Equispaced-parameter sampling; throws std::invalid_argument for M < 16 or
// odd M, and for invalid shapes (non-positive radii, |petal amplitude| >= 1,
// a custom curve that fails to close or self-intersects at the sampling
// resolution).
BoundaryMesh sample_boundary(const ParametricShape& shape, int M);

// 1/2 * closed integral of <x, nu> ds; positive for ccw orientation.
double signed_area(const BoundaryMesh& mesh);

double perimeter(const BoundaryMesh& mesh);

// Distance from a point to the curve, computed on a dense polyline.
double distance_to_curve(const ParametricShape& shape, const Vec2& x, int samples = 4096);

}  // namespace esense
