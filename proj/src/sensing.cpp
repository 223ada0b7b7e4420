#include "esense/sensing.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace esense {

namespace {

bool same_points(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a - b).norm() == 0.0;
}

void check_point_list(const Mat& pts, const char* what) {
  if (pts.cols() != 2) throw std::invalid_argument(std::string(what) + " must be an N x 2 list");
  if (pts.rows() < 1) throw std::invalid_argument(std::string(what) + " must not be empty");
}

double factorial(int n) {
  double out = 1.0;
  for (int i = 2; i <= n; ++i) out *= i;
  return out;
}

// Basis-coefficient column of Gamma(. - p) for every point in `pts`.
Mat green_columns(const Mat& pts, const WaveletGrid& grid, int lattice_depth,
                  const ScalingFilter& f) {
  Mat cols(grid.size(), pts.rows());
  for (int s = 0; s < pts.rows(); ++s) {
    const Vec2 p = pts.row(s).transpose();
    cols.col(s) = flatten_row_major(green_coeffs(p, grid, lattice_depth, f));
  }
  return cols;
}

Mat taylor_columns(const Mat& pts, const std::vector<std::array<int, 2>>& exponents) {
  Mat cols(static_cast<Eigen::Index>(exponents.size()), pts.rows());
  for (int s = 0; s < pts.rows(); ++s) {
    const Vec2 p = pts.row(s).transpose();
    if (p.norm() == 0.0)
      throw std::invalid_argument("polynomial basis point coincides with the expansion center");
    for (std::size_t e = 0; e < exponents.size(); ++e) {
      const auto& a = exponents[e];
      const int total = a[0] + a[1];
      const double sign = (total % 2 == 0) ? 1.0 : -1.0;
      cols(static_cast<Eigen::Index>(e), s) =
          sign / (factorial(a[0]) * factorial(a[1])) * gamma_partial(a, p);
    }
  }
  return cols;
}

}  // namespace

MeasurementSystem MeasurementSystem::far_circle(double radius, int count, const Vec2& center,
                                                double phase) {
  if (radius <= 0.0) throw std::invalid_argument("far-field radius must be positive");
  if (count < 1) throw std::invalid_argument("far-field circle needs at least one point");
  Mat pts(count, 2);
  for (int i = 0; i < count; ++i) {
    const double t = phase + kTwoPi * i / count;
    pts(i, 0) = center.x() + radius * std::cos(t);
    pts(i, 1) = center.y() + radius * std::sin(t);
  }
  MeasurementSystem sys;
  sys.sources = pts;
  sys.receivers = std::move(pts);
  sys.layout = Layout::FarCircle;
  sys.coincident = true;
  sys.center = center;
  sys.radius = radius;
  return sys;
}

MeasurementSystem MeasurementSystem::near_grid(const Box2& box, int per_axis) {
  if (per_axis < 1) throw std::invalid_argument("near-field grid needs at least one cell per axis");
  if (box.width(0) <= 0.0 || box.width(1) <= 0.0)
    throw std::invalid_argument("near-field grid box must have positive widths");
  Mat pts(per_axis * per_axis, 2);
  for (int i = 0; i < per_axis; ++i) {
    for (int j = 0; j < per_axis; ++j) {
      pts(i * per_axis + j, 0) = box.lo.x() + (i + 0.5) * box.width(0) / per_axis;
      pts(i * per_axis + j, 1) = box.lo.y() + (j + 0.5) * box.width(1) / per_axis;
    }
  }
  MeasurementSystem sys;
  sys.sources = pts;
  sys.receivers = std::move(pts);
  sys.layout = Layout::NearGrid;
  sys.coincident = true;
  sys.center = 0.5 * (box.lo + box.hi);
  sys.box = box;
  sys.per_axis = per_axis;
  return sys;
}

MeasurementSystem MeasurementSystem::custom(Mat sources, Mat receivers) {
  check_point_list(sources, "sources");
  check_point_list(receivers, "receivers");
  MeasurementSystem sys;
  sys.coincident = same_points(sources, receivers);
  sys.sources = std::move(sources);
  sys.receivers = std::move(receivers);
  sys.layout = Layout::Custom;
  return sys;
}

MeasurementSystem MeasurementSystem::with_standoff(const ParametricShape& shape,
                                                   double standoff) const {
  if (standoff < 0.0) throw std::invalid_argument("standoff must be non-negative");
  const auto filter = [&](const Mat& pts) {
    std::vector<int> keep;
    for (int i = 0; i < pts.rows(); ++i) {
      if (distance_to_curve(shape, pts.row(i).transpose()) > standoff) keep.push_back(i);
    }
    Mat out(static_cast<Eigen::Index>(keep.size()), 2);
    for (std::size_t i = 0; i < keep.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = pts.row(keep[i]);
    return out;
  };
  MeasurementSystem sys = *this;
  sys.sources = filter(sources);
  sys.receivers = coincident ? sys.sources : filter(receivers);
  if (sys.sources.rows() == 0 || sys.receivers.rows() == 0)
    throw std::invalid_argument("standoff removed every measurement point");
  return sys;
}

MsrMatrix simulate(const MeasurementSystem& sys, const BoundaryMesh& mesh,
                   const Conductivity& cond) {
  MsrMatrix out;
  out.entries = simulate_msr(mesh, cond, sys.sources, sys.receivers);
  out.noisy = false;
  return out;
}

double noise_level(const NoiseModel& model, const Mat& v) {
  if (model.sigma0 < 0.0) throw std::invalid_argument("noise fraction must be non-negative");
  if (v.size() == 0) throw std::invalid_argument("noise level of an empty matrix");
  return model.sigma0 * v.norm() / std::sqrt(static_cast<double>(v.size()));
}

MsrMatrix add_noise(const MsrMatrix& v, const NoiseModel& model) {
  const double sigma = noise_level(model, v.entries);
  if (sigma == 0.0) return v;
  std::mt19937_64 rng(model.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MsrMatrix out;
  out.entries.resize(v.entries.rows(), v.entries.cols());
  for (Eigen::Index i = 0; i < v.entries.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.entries.cols(); ++j) {
      out.entries(i, j) = v.entries(i, j) + sigma * gauss(rng);
    }
  }
  out.noisy = true;
  return out;
}

ForwardOperator build_forward_operator(const MeasurementSystem& sys, const WaveletBasis& basis) {
  const int q = basis.lattice_depth == 0 ? default_lattice_depth(basis.grid.level)
                                         : basis.lattice_depth;
  if (q < std::max(1, -basis.grid.level))
    throw std::invalid_argument("lattice depth too shallow for the grid level");
  if (!basis.interior_sources) {
    for (int s = 0; s < sys.sources.rows(); ++s) {
      if (basis.grid.omega.contains(sys.sources.row(s).transpose()))
        throw std::invalid_argument("source inside the expansion window (set interior_sources)");
    }
    for (int r = 0; r < sys.receivers.rows(); ++r) {
      if (basis.grid.omega.contains(sys.receivers.row(r).transpose()))
        throw std::invalid_argument("receiver inside the expansion window (set interior_sources)");
    }
  }
  ForwardOperator op;
  op.kind = BasisKind::Wavelet;
  op.scale_or_order = basis.grid.level;
  op.gx = green_columns(sys.sources, basis.grid, q, basis.filter);
  op.gy = sys.coincident ? op.gx : green_columns(sys.receivers, basis.grid, q, basis.filter);
  return op;
}

ForwardOperator build_forward_operator(const MeasurementSystem& sys, const PolynomialBasis& basis) {
  const auto exponents = polynomial_exponents(basis.order);
  ForwardOperator op;
  op.kind = BasisKind::Polynomial;
  op.scale_or_order = basis.order;
  op.gx = taylor_columns(sys.sources, exponents);
  op.gy = sys.coincident ? op.gx : taylor_columns(sys.receivers, exponents);
  return op;
}

Vec singular_value_profile(const ForwardOperator& op, int count) {
  if (count < 1) throw std::invalid_argument("singular value count must be positive");
  const Vec sx = Eigen::JacobiSVD<Mat>(op.gx).singularValues();
  const Vec sy = Eigen::JacobiSVD<Mat>(op.gy).singularValues();
  std::vector<double> products;
  products.reserve(static_cast<std::size_t>(sx.size()) * static_cast<std::size_t>(sy.size()));
  for (Eigen::Index i = 0; i < sx.size(); ++i) {
    for (Eigen::Index j = 0; j < sy.size(); ++j) products.push_back(sx(i) * sy(j));
  }
  std::sort(products.begin(), products.end(), std::greater<>());
  const int n = std::min<int>(count, static_cast<int>(products.size()));
  return Eigen::Map<const Vec>(products.data(), n);
}

}  // namespace esense
