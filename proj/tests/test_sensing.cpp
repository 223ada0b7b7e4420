#include "esense/sensing.hpp"

#include <cmath>
#include <iostream>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "esense/bem.hpp"
#include "esense/features.hpp"
#include "esense/geometry.hpp"
#include "esense/wavelet.hpp"

using namespace esense;

namespace {

const ScalingFilter& filter6() {
  static const ScalingFilter f = ScalingFilter::daubechies(6);
  return f;
}

const ScalingTable& table6() {
  static const ScalingTable t = build_scaling_table(filter6());
  return t;
}

// Shared configuration: the flower inclusion sits well inside the imaging
// window [-1, 1]^2 that carries both the level -4 atom grid and the 15 x 15
// transmitter grid.
const Box2& window() {
  static const Box2 b{{-1.0, -1.0}, {1.0, 1.0}};
  return b;
}

const ParametricShape& flower_shape() {
  static const ParametricShape s =
      ParametricShape::flower(0.32, 5, 0.25, Vec2(0.02, -0.01), 0.4);
  return s;
}

const BoundaryMesh& flower_mesh() {
  static const BoundaryMesh m = sample_boundary(flower_shape(), 256);
  return m;
}

const Conductivity& contrast43() {
  static const Conductivity c = Conductivity::from_contrast(4.0 / 3.0);
  return c;
}

const WaveletGrid& window_grid() {
  static const WaveletGrid g = support_grid(window(), -4, filter6().support());
  return g;
}

// Coefficient lattice depth for the operators under test. Depth 8 keeps the
// quadrature error well below the level -4 truncation error (checked against
// depth 10) at a fraction of the cost.
constexpr int kOperatorDepth = 8;

WaveletBasis window_basis() { return WaveletBasis{window_grid(), filter6(), kOperatorDepth, true}; }

// Sources kept 2.4 atom scales away from the boundary so that the level -4
// projection of the kernel is accurate on the touching atoms.
constexpr double kStandoff = 0.15;

const MeasurementSystem& near_system() {
  static const MeasurementSystem sys =
      MeasurementSystem::near_grid(window(), 15).with_standoff(flower_shape(), kStandoff);
  return sys;
}

const ForwardOperator& near_operator() {
  static const ForwardOperator op = build_forward_operator(near_system(), window_basis());
  return op;
}

const ForwardOperator& far_operator() {
  static const ForwardOperator op =
      build_forward_operator(MeasurementSystem::far_circle(3.0, 64), window_basis());
  return op;
}

double condition_number(const Mat& g) {
  const Vec s = Eigen::JacobiSVD<Mat>(g).singularValues();
  return s(0) / s(s.size() - 1);
}

}  // namespace

TEST_CASE("far-field circles and near-field grids have the advertised geometry") {
  const MeasurementSystem far = MeasurementSystem::far_circle(3.0, 64);
  CHECK(far.num_sources() == 64);
  CHECK(far.num_receivers() == 64);
  CHECK(far.coincident);
  CHECK(far.layout == Layout::FarCircle);
  CHECK(far.radius == doctest::Approx(3.0));
  for (int i = 0; i < 64; ++i) {
    CHECK(far.sources.row(i).norm() == doctest::Approx(3.0).epsilon(1e-12));
  }
  CHECK(far.sources(0, 0) == doctest::Approx(3.0));
  CHECK(far.sources(0, 1) == doctest::Approx(0.0));
  // Equal angular spacing, starting at the requested phase.
  const MeasurementSystem shifted = MeasurementSystem::far_circle(2.0, 8, Vec2(0.5, -0.25), 0.3);
  for (int i = 0; i < 8; ++i) {
    const Vec2 p = shifted.sources.row(i).transpose() - Vec2(0.5, -0.25);
    CHECK(p.norm() == doctest::Approx(2.0).epsilon(1e-12));
    const double angle = std::atan2(p.y(), p.x());
    const double expected = std::remainder(0.3 + kTwoPi * i / 8, kTwoPi);
    CHECK(std::remainder(angle - expected, kTwoPi) == doctest::Approx(0.0).epsilon(1e-12));
  }

  const Box2 box{{-0.5, -0.5}, {0.5, 0.5}};
  const MeasurementSystem near = MeasurementSystem::near_grid(box, 4);
  CHECK(near.num_sources() == 16);
  CHECK(near.coincident);
  CHECK(near.layout == Layout::NearGrid);
  for (int i = 0; i < near.num_sources(); ++i) {
    CHECK(box.contains(near.sources.row(i).transpose()));
  }
  // Cell centers of a 4 x 4 partition: first at lo + half cell, spacing 1/4.
  CHECK(near.sources(0, 0) == doctest::Approx(-0.375));
  CHECK(near.sources(0, 1) == doctest::Approx(-0.375));
  CHECK(near.sources(1, 1) - near.sources(0, 1) == doctest::Approx(0.25));
  CHECK(near.sources(4, 0) - near.sources(0, 0) == doctest::Approx(0.25));

  Mat a(2, 2), b(3, 2);
  a << 1.0, 0.0, 0.0, 1.0;
  b << 2.0, 0.0, 0.0, 2.0, -2.0, 0.0;
  CHECK(MeasurementSystem::custom(a, a).coincident);
  CHECK_FALSE(MeasurementSystem::custom(a, b).coincident);
  CHECK(MeasurementSystem::custom(a, b).layout == Layout::Custom);

  CHECK_THROWS_AS(MeasurementSystem::far_circle(0.0, 64), std::invalid_argument);
  CHECK_THROWS_AS(MeasurementSystem::far_circle(3.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(MeasurementSystem::near_grid(box, 0), std::invalid_argument);
  CHECK_THROWS_AS(MeasurementSystem::custom(Mat(2, 3), a), std::invalid_argument);
  CHECK_THROWS_AS(MeasurementSystem::custom(a, Mat(0, 2)), std::invalid_argument);
}

TEST_CASE("standoff filtering removes exactly the points near the curve") {
  const MeasurementSystem full = MeasurementSystem::near_grid(window(), 15);
  const MeasurementSystem kept = full.with_standoff(flower_shape(), kStandoff);

  CHECK(kept.coincident);
  CHECK(kept.layout == Layout::NearGrid);
  CHECK(kept.num_sources() < full.num_sources());
  for (int i = 0; i < kept.num_sources(); ++i) {
    CHECK(distance_to_curve(flower_shape(), kept.sources.row(i).transpose()) > kStandoff);
  }
  // Every dropped point is genuinely within the standoff.
  int dropped = 0;
  for (int i = 0; i < full.num_sources(); ++i) {
    if (distance_to_curve(flower_shape(), full.sources.row(i).transpose()) <= kStandoff) ++dropped;
  }
  CHECK(full.num_sources() - kept.num_sources() == dropped);

  CHECK_THROWS_AS(full.with_standoff(flower_shape(), 10.0), std::invalid_argument);
  CHECK_THROWS_AS(full.with_standoff(flower_shape(), -0.1), std::invalid_argument);

  // The simulation itself refuses points within one mesh spacing of the
  // boundary.
  Mat close(1, 2);
  close.row(0) =
      (flower_mesh().at(0) + 0.5 * flower_mesh().mesh_spacing() * flower_mesh().normal(0))
          .transpose();
  const MeasurementSystem bad = MeasurementSystem::custom(close, close);
  CHECK_THROWS_AS(simulate(bad, flower_mesh(), contrast43()), std::invalid_argument);
}

TEST_CASE("forward application matches the entrywise double expansion") {
  const Box2 box{{-0.5, -0.5}, {0.5, 0.5}};
  const WaveletGrid grid = support_grid(box, -3, filter6().support());
  const WaveletBasis basis{grid, filter6(), 8, false};
  Mat src(3, 2), rec(2, 2);
  src << 1.5, 0.2, -1.2, 0.9, 0.1, -1.4;
  rec << 2.0, 0.0, 0.0, 1.8;
  const MeasurementSystem sys = MeasurementSystem::custom(src, rec);
  const ForwardOperator op = build_forward_operator(sys, basis);
  const int K = grid.size();
  REQUIRE(op.gx.rows() == K);
  REQUIRE(op.gx.cols() == 3);
  REQUIRE(op.gy.cols() == 2);
  CHECK(op.kind == BasisKind::Wavelet);
  CHECK(op.scale_or_order == -3);

  // Columns are exactly the flattened kernel coefficient windows.
  const Vec col1 = flatten_row_major(green_coeffs(Vec2(-1.2, 0.9), grid, 8, filter6()));
  CHECK((op.gx.col(1) - col1).norm() == 0.0);

  std::mt19937 rng(17);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat x(K, K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) x(i, j) = gauss(rng);

  Mat oracle = Mat::Zero(3, 2);
  for (int s = 0; s < 3; ++s)
    for (int r = 0; r < 2; ++r)
      for (int m = 0; m < K; ++m)
        for (int n = 0; n < K; ++n) oracle(s, r) += op.gx(m, s) * x(m, n) * op.gy(n, r);

  const Mat v = op.apply(x);
  CHECK((v - oracle).norm() <= 1e-10 * oracle.norm());

  // The sparse overload agrees with the dense one.
  const SpMat xs = x.sparseView();
  CHECK((op.apply(xs) - v).norm() <= 1e-12 * v.norm());

  // Linearity to machine precision.
  Mat y(K, K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) y(i, j) = gauss(rng);
  const Mat combo = op.apply((2.0 * x + 3.0 * y).eval());
  CHECK((combo - 2.0 * op.apply(x) - 3.0 * op.apply(y)).norm() <= 1e-12 * combo.norm());

  // A single unit entry produces the advertised rank-one outer product.
  Mat e = Mat::Zero(K, K);
  e(7, 12) = 1.0;
  const Mat rank1 = op.apply(e);
  const Mat outer = op.gx.row(7).transpose() * op.gy.row(12);
  CHECK((rank1 - outer).norm() <= 1e-14 * outer.norm());

  // Adjoint identity <L(X), V> = <X, L'(V)>.
  for (int trial = 0; trial < 3; ++trial) {
    Mat xt(K, K), vt(3, 2);
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j) xt(i, j) = gauss(rng);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j) vt(i, j) = gauss(rng);
    const double lhs = (op.apply(xt).array() * vt.array()).sum();
    const double rhs = (xt.array() * op.adjoint(vt).array()).sum();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }

  // Coincident systems compute the receiver factor once.
  const ForwardOperator both = build_forward_operator(MeasurementSystem::custom(src, src), basis);
  CHECK((both.gy - both.gx).norm() == 0.0);

  // Interior sources are rejected unless explicitly allowed.
  Mat inside(1, 2);
  inside << 0.1, 0.1;
  const MeasurementSystem sys_in = MeasurementSystem::custom(inside, inside);
  CHECK_THROWS_AS(build_forward_operator(sys_in, basis), std::invalid_argument);
  const WaveletBasis opt_in{grid, filter6(), 8, true};
  CHECK_NOTHROW(build_forward_operator(sys_in, opt_in));

  // Lattice depth must reach the grid level.
  const WaveletBasis shallow{grid, filter6(), 2, false};
  CHECK_THROWS_AS(build_forward_operator(sys, shallow), std::invalid_argument);

  // Dimension guards on application.
  CHECK_THROWS_AS(op.apply(Mat(K + 1, K)), std::invalid_argument);
  CHECK_THROWS_AS(op.adjoint(Mat(2, 3)), std::invalid_argument);
}

TEST_CASE("level projection reproduces simulated near-field data within the truncation budget") {
  const WaveletFeatureMatrix x =
      assemble_wavelet_matrix(flower_mesh(), contrast43(), window_grid(), table6());
  const MsrMatrix v = simulate(near_system(), flower_mesh(), contrast43());
  REQUIRE(v.entries.rows() == near_system().num_sources());
  REQUIRE(v.entries.allFinite());
  CHECK_FALSE(v.noisy);

  const Mat lx = near_operator().apply(x.entries);
  const double rel = (lx - v.entries).norm() / v.entries.norm();
  std::cout << "near-field truncation error at level -4: " << rel << " over "
            << near_system().num_sources() << " transmitters\n";
  CHECK(rel <= 0.03);
  // The residual is genuinely the projection truncation, not numerical noise.
  CHECK(rel >= 0.005);
}

TEST_CASE("near-field systems retain vastly more usable singular directions than far-field") {
  const MeasurementSystem near_full = MeasurementSystem::near_grid(window(), 15);
  const ForwardOperator op_near = build_forward_operator(near_full, window_basis());

  const Vec prof_near = singular_value_profile(op_near, 200);
  const Vec prof_far = singular_value_profile(far_operator(), 200);
  REQUIRE(prof_near.size() == 200);
  REQUIRE(prof_far.size() == 200);

  // Profiles are sorted and start at the product of the factor norms.
  for (int i = 1; i < 200; ++i) {
    CHECK(prof_near(i) <= prof_near(i - 1));
    CHECK(prof_far(i) <= prof_far(i - 1));
  }
  const double top_near = Eigen::JacobiSVD<Mat>(op_near.gx).singularValues()(0);
  CHECK(prof_near(0) == doctest::Approx(top_near * top_near).epsilon(1e-10));

  const double decay_near = prof_near(199) / prof_near(0);
  const double decay_far = prof_far(199) / prof_far(0);
  std::cout << "sigma_200/sigma_1 near " << decay_near << " far " << decay_far << "\n";
  CHECK(decay_near >= 1e3 * decay_far);

  // On the tight working window the far-field profile collapses by
  // two hundred singular values.
  const WaveletGrid tight = support_grid(Box2{{-0.5, -0.5}, {0.5, 0.5}}, -4, filter6().support());
  const ForwardOperator op_tight = build_forward_operator(
      MeasurementSystem::far_circle(3.0, 64), WaveletBasis{tight, filter6(), kOperatorDepth, false});
  const Vec prof_tight = singular_value_profile(op_tight, 200);
  CHECK(prof_tight(199) / prof_tight(0) <= 1e-6);

  // Equal transmitter counts: the near-field factor is far better conditioned.
  Mat sub(64, 2);
  for (int i = 0; i < 64; ++i) sub.row(i) = near_full.sources.row((i * 225) / 64);
  const ForwardOperator op_near64 =
      build_forward_operator(MeasurementSystem::custom(sub, sub), window_basis());
  const double cond_near = condition_number(op_near64.gx);
  const double cond_far = condition_number(far_operator().gx);
  std::cout << "cond near64 " << cond_near << " far64 " << cond_far << "\n";
  CHECK(cond_near < 1e3);
  CHECK(cond_far > 1e8);

  // Every atom row carries signal, so masked entry weights stay positive.
  CHECK(op_near.gx.rowwise().norm().minCoeff() > 1e-3);
  CHECK(far_operator().gx.rowwise().norm().minCoeff() > 1e-3);

  // Count handling.
  const Vec clamped = singular_value_profile(far_operator(), 1 << 30);
  CHECK(clamped.size() == 64 * 64);
  CHECK_THROWS_AS(singular_value_profile(far_operator(), 0), std::invalid_argument);
}

TEST_CASE("polynomial operators carry the derivative weights of the kernel expansion") {
  const MeasurementSystem far = MeasurementSystem::far_circle(3.0, 64);
  const ForwardOperator op2 = build_forward_operator(far, PolynomialBasis{2});
  CHECK(op2.kind == BasisKind::Polynomial);
  CHECK(op2.scale_or_order == 2);
  REQUIRE(op2.gx.rows() == 5);  // (1,0) (0,1) (2,0) (1,1) (0,2)

  // Hand-computed Taylor weights of the logarithmic kernel at (3, 0):
  // entry(alpha) = (-1)^|alpha| / alpha! * d^alpha Gamma.
  const double inv2pi = 1.0 / kTwoPi;
  CHECK(op2.gx(0, 0) == doctest::Approx(-inv2pi / 3.0).epsilon(1e-12));
  CHECK(op2.gx(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(op2.gx(2, 0) == doctest::Approx(0.5 * inv2pi * (9.0 - 18.0) / 81.0).epsilon(1e-12));
  CHECK(op2.gx(3, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(op2.gx(4, 0) == doctest::Approx(0.5 * inv2pi * 9.0 / 81.0).epsilon(1e-12));

  // Consistency against the simulated response: the expansion error decays
  // rapidly with the order because the inclusion is small relative to the
  // measurement radius.
  const MsrMatrix v = simulate(far, flower_mesh(), contrast43());
  const PolynomialFeatureMatrix x4 = assemble_polynomial_matrix(flower_mesh(), contrast43(), 4);
  const PolynomialFeatureMatrix x6 = assemble_polynomial_matrix(flower_mesh(), contrast43(), 6);
  const ForwardOperator op4 = build_forward_operator(far, PolynomialBasis{4});
  const ForwardOperator op6 = build_forward_operator(far, PolynomialBasis{6});
  const double err4 = (op4.apply(x4.entries) - v.entries).norm() / v.entries.norm();
  const double err6 = (op6.apply(x6.entries) - v.entries).norm() / v.entries.norm();
  std::cout << "far-field expansion error order 4: " << err4 << ", order 6: " << err6 << "\n";
  CHECK(err4 <= 1e-4);
  CHECK(err6 <= 1e-5);
  CHECK(err6 < err4);

  // Row-block norms decrease along the order, reflecting the (delta/rho)
  // decay of the expansion.
  const auto exponents = polynomial_exponents(6);
  std::vector<double> block(7, 0.0);
  for (std::size_t e = 0; e < exponents.size(); ++e) {
    block[exponents[e][0] + exponents[e][1]] += op6.gx.row(static_cast<Eigen::Index>(e)).squaredNorm();
  }
  for (int m = 2; m <= 6; ++m) CHECK(std::sqrt(block[m]) < std::sqrt(block[m - 1]));

  // Adjoint identity for the polynomial operator.
  std::mt19937 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat xt(5, 5), vt(64, 64);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) xt(i, j) = gauss(rng);
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) vt(i, j) = gauss(rng);
  const double lhs = (op2.apply(xt).array() * vt.array()).sum();
  const double rhs = (xt.array() * op2.adjoint(vt).array()).sum();
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));

  CHECK_THROWS_AS(build_forward_operator(far, PolynomialBasis{0}), std::invalid_argument);
  Mat origin(1, 2);
  origin << 0.0, 0.0;
  CHECK_THROWS_AS(
      build_forward_operator(MeasurementSystem::custom(origin, origin), PolynomialBasis{2}),
      std::invalid_argument);
}

TEST_CASE("noise injection is calibrated, seeded, and skipped at zero level") {
  Mat v(400, 400);
  std::mt19937 rng(123);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < 400; ++i)
    for (int j = 0; j < 400; ++j) v(i, j) = gauss(rng) + 0.3;
  const MsrMatrix clean{v, false};

  const NoiseModel model{0.37, 99};
  const double sigma = noise_level(model, v);
  CHECK(sigma == doctest::Approx(0.37 * v.norm() / 400.0).epsilon(1e-14));

  const MsrMatrix noisy = add_noise(clean, NoiseModel{1.0, 42});
  CHECK(noisy.noisy);
  const Mat w = noisy.entries - clean.entries;
  const double target = noise_level(NoiseModel{1.0, 42}, v);
  // Frobenius calibration: a 100% noise level reproduces the signal norm.
  CHECK(w.norm() / v.norm() == doctest::Approx(1.0).epsilon(0.03));
  // Entrywise spread matches the requested level on a large sample.
  const double mean = w.mean();
  const double var = (w.array() - mean).square().sum() / (w.size() - 1);
  CHECK(std::sqrt(var) == doctest::Approx(target).epsilon(0.05));
  CHECK(std::abs(mean) <= 5.0 * target / 400.0);

  // Determinism in the seed.
  const MsrMatrix again = add_noise(clean, NoiseModel{1.0, 42});
  CHECK((again.entries - noisy.entries).norm() == 0.0);
  const MsrMatrix other = add_noise(clean, NoiseModel{1.0, 43});
  CHECK((other.entries - noisy.entries).norm() > 0.0);

  // Zero level copies the data untouched.
  const MsrMatrix same = add_noise(clean, NoiseModel{0.0, 42});
  CHECK_FALSE(same.noisy);
  CHECK((same.entries - clean.entries).norm() == 0.0);

  CHECK_THROWS_AS(noise_level(NoiseModel{-0.5, 0}, v), std::invalid_argument);
  CHECK_THROWS_AS(noise_level(NoiseModel{1.0, 0}, Mat(0, 0)), std::invalid_argument);
}
