// Measurement systems (far-field circle, near-field grid), the linear
// forward operator mapping a feature matrix to multistatic data,
// V = Gx' X Gy, white-noise injection, and singular-value diagnostics.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "esense/bem.hpp"
#include "esense/features.hpp"
#include "esense/geometry.hpp"
#include "esense/types.hpp"
#include "esense/wavelet.hpp"

namespace esense {

enum class Layout { FarCircle, NearGrid, Custom };

// Source and receiver point lists. Geometry relative to the inclusion
// (standoff from the boundary) is enforced where the inclusion is known:
// at simulation time and through with_standoff.
struct MeasurementSystem {
  Mat sources;    // Ns x 2
  Mat receivers;  // Nr x 2
  Layout layout = Layout::Custom;
  bool coincident = false;
  Vec2 center = Vec2::Zero();
  double radius = 0.0;  // far-field circle radius
  Box2 box{};           // near-field grid frame
  int per_axis = 0;     // near-field cells per axis (0 when not a grid)

  int num_sources() const { return static_cast<int>(sources.rows()); }
  int num_receivers() const { return static_cast<int>(receivers.rows()); }

  // Coincident transmitters equally spaced on a circle.
  static MeasurementSystem far_circle(double radius, int count, const Vec2& center = Vec2::Zero(),
                                      double phase = 0.0);
  // Coincident transmitters at the cell centers of a per_axis^2 grid.
  static MeasurementSystem near_grid(const Box2& box, int per_axis);
  static MeasurementSystem custom(Mat sources, Mat receivers);

  // Copy with every point closer than `standoff` to the curve removed
  // (from both lists); throws if either list empties.
  MeasurementSystem with_standoff(const ParametricShape& shape, double standoff) const;
};

// Multistatic response data, sources along rows.
struct MsrMatrix {
  Mat entries;
  bool noisy = false;
};

MsrMatrix simulate(const MeasurementSystem& sys, const BoundaryMesh& mesh,
                   const Conductivity& cond);

// White noise calibrated to a fraction of the per-entry signal level:
// sigma = sigma0 ||V||_F / sqrt(Ns Nr).
struct NoiseModel {
  double sigma0 = 0.0;
  std::uint64_t seed = 0;
};

double noise_level(const NoiseModel& model, const Mat& v);
MsrMatrix add_noise(const MsrMatrix& v, const NoiseModel& model);

// Basis specifications for the forward operator. A zero lattice_depth picks
// max(8, 6 - level). Sources inside the grid box hit the kernel's capped
// singularity; that is opt-in via interior_sources.
struct WaveletBasis {
  WaveletGrid grid;
  ScalingFilter filter;
  int lattice_depth = 0;
  bool interior_sources = false;
};

struct PolynomialBasis {
  int order = 0;
};

enum class BasisKind { Wavelet, Polynomial };

// V = Gx' X Gy with Gx holding per-source basis-coefficient columns of the
// fundamental solution and Gy per-receiver columns.
struct ForwardOperator {
  BasisKind kind = BasisKind::Wavelet;
  int scale_or_order = 0;  // wavelet level, or polynomial order
  Mat gx;                  // basis dim x Ns
  Mat gy;                  // basis dim x Nr

  Mat apply(const Mat& x) const {
    check_feature_shape(x.rows(), x.cols());
    return gx.transpose() * x * gy;
  }
  Mat apply(const SpMat& x) const {
    check_feature_shape(x.rows(), x.cols());
    return gx.transpose() * (x * gy);
  }
  Mat adjoint(const Mat& v) const {
    if (v.rows() != gx.cols() || v.cols() != gy.cols())
      throw std::invalid_argument("data dimensions do not match the measurement system");
    return gx * v * gy.transpose();
  }

 private:
  void check_feature_shape(Eigen::Index rows, Eigen::Index cols) const {
    if (rows != gx.rows() || cols != gy.rows())
      throw std::invalid_argument("feature matrix dimensions do not match the operator basis");
  }
};

ForwardOperator build_forward_operator(const MeasurementSystem& sys, const WaveletBasis& basis);
ForwardOperator build_forward_operator(const MeasurementSystem& sys, const PolynomialBasis& basis);

// Largest `count` singular values of the forward operator, obtained as the
// sorted pairwise products of the singular values of Gx and Gy.
Vec singular_value_profile(const ForwardOperator& op, int count);

}  // namespace esense
