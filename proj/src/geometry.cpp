#include "esense/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace esense {

namespace {

Mat2 rotation_matrix(double a) {
  Mat2 r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r;
}

void validate(const ParametricShape& s) {
  switch (s.kind) {
    case ShapeKind::Disk:
      if (s.radius <= 0.0) throw std::invalid_argument("shape: disk radius must be positive");
      break;
    case ShapeKind::Ellipse:
      if (s.axis_a <= 0.0 || s.axis_b <= 0.0)
        throw std::invalid_argument("shape: ellipse semi-axes must be positive");
      break;
    case ShapeKind::Flower:
      if (s.radius <= 0.0) throw std::invalid_argument("shape: flower radius must be positive");
      if (s.petals < 1) throw std::invalid_argument("shape: flower needs at least one petal");
      if (std::abs(s.petal_amplitude) >= 1.0)
        throw std::invalid_argument(
            "shape: petal amplitude must satisfy |a| < 1 so the radius stays positive");
      break;
    case ShapeKind::Custom:
      if (!s.position) throw std::invalid_argument("shape: custom curve needs a position map");
      break;
  }
  if (s.scale <= 0.0) throw std::invalid_argument("shape: scale must be positive");
}

// Local (pre center/rotation/scale) curve evaluation.
Vec2 local_point(const ParametricShape& s, double t) {
  switch (s.kind) {
    case ShapeKind::Disk:
      return {s.radius * std::cos(t), s.radius * std::sin(t)};
    case ShapeKind::Ellipse:
      return {s.axis_a * std::cos(t), s.axis_b * std::sin(t)};
    case ShapeKind::Flower: {
      const double r = s.radius * (1.0 + s.petal_amplitude * std::cos(s.petals * t));
      return {r * std::cos(t), r * std::sin(t)};
    }
    case ShapeKind::Custom:
      return s.position(t);
  }
  return Vec2::Zero();
}

Vec2 local_d1(const ParametricShape& s, double t) {
  switch (s.kind) {
    case ShapeKind::Disk:
      return {-s.radius * std::sin(t), s.radius * std::cos(t)};
    case ShapeKind::Ellipse:
      return {-s.axis_a * std::sin(t), s.axis_b * std::cos(t)};
    case ShapeKind::Flower: {
      const double m = s.petals;
      const double r = s.radius * (1.0 + s.petal_amplitude * std::cos(m * t));
      const double dr = -s.radius * s.petal_amplitude * m * std::sin(m * t);
      const double c = std::cos(t), sn = std::sin(t);
      return {dr * c - r * sn, dr * sn + r * c};
    }
    case ShapeKind::Custom: {
      if (s.derivative) return s.derivative(t);
      const double h = 1e-5;
      return (s.position(t + h) - s.position(t - h)) / (2.0 * h);
    }
  }
  return Vec2::Zero();
}

Vec2 local_d2(const ParametricShape& s, double t) {
  switch (s.kind) {
    case ShapeKind::Disk:
    case ShapeKind::Ellipse:
      return -local_point(s, t);
    case ShapeKind::Flower: {
      const double m = s.petals;
      const double r = s.radius * (1.0 + s.petal_amplitude * std::cos(m * t));
      const double dr = -s.radius * s.petal_amplitude * m * std::sin(m * t);
      const double ddr = -s.radius * s.petal_amplitude * m * m * std::cos(m * t);
      const double c = std::cos(t), sn = std::sin(t);
      return {ddr * c - 2.0 * dr * sn - r * c, ddr * sn + 2.0 * dr * c - r * sn};
    }
    case ShapeKind::Custom: {
      if (s.second_derivative) return s.second_derivative(t);
      const double h = 1e-4;
      return (s.position(t + h) - 2.0 * s.position(t) + s.position(t - h)) / (h * h);
    }
  }
  return Vec2::Zero();
}

// Proper segment intersection test (shared endpoints excluded by the caller).
bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
  };
  const double o1 = orient(a, b, c), o2 = orient(a, b, d);
  const double o3 = orient(c, d, a), o4 = orient(c, d, b);
  return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0));
}

}  // namespace

ParametricShape ParametricShape::disk(double r, const Vec2& c) {
  ParametricShape s;
  s.kind = ShapeKind::Disk;
  s.radius = r;
  s.center = c;
  return s;
}

ParametricShape ParametricShape::ellipse(double a, double b, const Vec2& c, double rot) {
  ParametricShape s;
  s.kind = ShapeKind::Ellipse;
  s.axis_a = a;
  s.axis_b = b;
  s.center = c;
  s.rotation = rot;
  return s;
}

ParametricShape ParametricShape::flower(double r, int petals, double amplitude, const Vec2& c,
                                        double rot) {
  ParametricShape s;
  s.kind = ShapeKind::Flower;
  s.radius = r;
  s.petals = petals;
  s.petal_amplitude = amplitude;
  s.center = c;
  s.rotation = rot;
  return s;
}

ParametricShape ParametricShape::custom(std::function<Vec2(double)> pos) {
  ParametricShape s;
  s.kind = ShapeKind::Custom;
  s.position = std::move(pos);
  return s;
}

Vec2 ParametricShape::point(double t) const {
  return center + scale * (rotation_matrix(rotation) * local_point(*this, t));
}

Vec2 ParametricShape::d1(double t) const {
  return scale * (rotation_matrix(rotation) * local_d1(*this, t));
}

Vec2 ParametricShape::d2(double t) const {
  return scale * (rotation_matrix(rotation) * local_d2(*this, t));
}

double ParametricShape::max_radius() const {
  switch (kind) {
    case ShapeKind::Disk:
      return scale * radius;
    case ShapeKind::Ellipse:
      return scale * std::max(axis_a, axis_b);
    case ShapeKind::Flower:
      return scale * radius * (1.0 + std::abs(petal_amplitude));
    case ShapeKind::Custom: {
      double r = 0.0;
      for (int i = 0; i < 1024; ++i) r = std::max(r, local_point(*this, kTwoPi * i / 1024).norm());
      return scale * r;
    }
  }
  return 0.0;
}

BoundaryMesh sample_boundary(const ParametricShape& shape, int M) {
  validate(shape);
  if (M < 16 || M % 2 != 0)
    throw std::invalid_argument("sample_boundary: node count must be even and at least 16");

  if (shape.kind == ShapeKind::Custom) {
    const Vec2 gap = shape.position(0.0) - shape.position(kTwoPi);
    if (gap.norm() > 1e-9 * (1.0 + shape.position(0.0).norm()))
      throw std::invalid_argument("sample_boundary: custom curve does not close");
  }

  BoundaryMesh mesh;
  mesh.points.resize(M, 2);
  mesh.tangents.resize(M, 2);
  mesh.normals.resize(M, 2);
  mesh.curvature.resize(M);
  mesh.weights.resize(M);

  const double dt = kTwoPi / M;
  for (int i = 0; i < M; ++i) {
    const double t = i * dt;
    const Vec2 p = shape.point(t);
    const Vec2 v = shape.d1(t);
    const Vec2 a = shape.d2(t);
    const double speed = v.norm();
    if (speed <= 0.0) throw std::invalid_argument("sample_boundary: degenerate parametrization");
    const Vec2 tang = v / speed;
    mesh.points.row(i) = p.transpose();
    mesh.tangents.row(i) = tang.transpose();
    mesh.normals.row(i) = Vec2(tang[1], -tang[0]).transpose();
    mesh.curvature[i] = (v[0] * a[1] - v[1] * a[0]) / (speed * speed * speed);
    mesh.weights[i] = speed * dt;
  }

  if (shape.kind == ShapeKind::Custom) {
    // Reject curves that self-intersect at the sampling resolution.
    for (int i = 0; i < M; ++i) {
      const Vec2 a = mesh.at(i), b = mesh.at((i + 1) % M);
      for (int j = i + 2; j < M; ++j) {
        if (i == 0 && j == M - 1) continue;  // adjacent through the seam
        if (segments_cross(a, b, mesh.at(j), mesh.at((j + 1) % M)))
          throw std::invalid_argument("sample_boundary: curve self-intersects");
      }
    }
  }

  if (signed_area(mesh) <= 0.0)
    throw std::invalid_argument("sample_boundary: curve must be counterclockwise");
  return mesh;
}

double signed_area(const BoundaryMesh& mesh) {
  double acc = 0.0;
  for (int i = 0; i < mesh.size(); ++i)
    acc += mesh.points.row(i).dot(mesh.normals.row(i)) * mesh.weights[i];
  return 0.5 * acc;
}

double perimeter(const BoundaryMesh& mesh) { return mesh.weights.sum(); }

double distance_to_curve(const ParametricShape& shape, const Vec2& x, int samples) {
  // Distance to the inscribed polyline; refined by projecting on each segment.
  double best = std::numeric_limits<double>::infinity();
  Vec2 prev = shape.point(0.0);
  for (int i = 1; i <= samples; ++i) {
    const Vec2 cur = shape.point(kTwoPi * i / samples);
    const Vec2 d = cur - prev;
    const double len2 = d.squaredNorm();
    double u = len2 > 0.0 ? (x - prev).dot(d) / len2 : 0.0;
    u = std::clamp(u, 0.0, 1.0);
    best = std::min(best, (x - (prev + u * d)).norm());
    prev = cur;
  }
  return best;
}

}  // namespace esense
