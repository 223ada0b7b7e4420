// Boundary integral layer for the 2D conductivity transmission problem.
//
// The perturbation of a logarithmic source field by an inclusion D with
// contrast k is encoded by a density on the boundary:
//
//   u_s - Gamma_s = S_D[phi_s],   (lambda I - K*_D) phi_s = dGamma_s/dnu,
//
// with lambda = (k+1) / (2(k-1)) and K*_D the Neumann-Poincare operator.
// Measured perturbations are values of the bilinear form
//
//   tau(f, g) = integral_over_dD of g * (lambda I - K*_D)^{-1}[df/dnu] ds,
//
// evaluated at pairs of source fields. Everything here is a Nystrom
// discretization built on the trapezoidal weights of a BoundaryMesh.
#pragma once

#include <complex>

#include <Eigen/LU>

#include "esense/geometry.hpp"
#include "esense/types.hpp"

namespace esense {

struct Conductivity {
  double k = 2.0;       // contrast of the inclusion, k > 0, k != 1
  double lambda = 1.5;  // (k+1) / (2(k-1)); |lambda| > 1/2 for admissible k

  static Conductivity from_contrast(double k);
};

// Nystrom matrix of K*_D with quadrature weights folded in (column j carries
// w_j). For the unit disk every entry equals w_j / (4 pi).
struct NpMatrix {
  Mat op;

  int size() const { return static_cast<int>(op.rows()); }
};

NpMatrix assemble_np(const BoundaryMesh& mesh);

Vec np_apply(const NpMatrix& np, const Vec& f);

// Eigenvalues of the discretized operator (real parts lie in
// (-1/2 - eps, 1/2 + eps] for resolved meshes).
Eigen::VectorXcd np_spectrum(const NpMatrix& np);

// Factors (lambda I - K) once and solves for many right-hand sides.
class DensitySolver {
 public:
  DensitySolver(const NpMatrix& np, const Conductivity& cond);

  Vec solve(const Vec& rhs) const;
  Mat solve(const Mat& rhs) const;
  double lambda() const { return lambda_; }

 private:
  double lambda_;
  Eigen::PartialPivLU<Mat> lu_;
};

// One-shot solve of (lambda I - K) phi = rhs; throws std::domain_error for
// |lambda| <= 1/2 (ill-posed contrast) and std::runtime_error if the residual
// exceeds 1e-10 * ||rhs||.
Vec solve_density(const NpMatrix& np, const Conductivity& cond, const Vec& rhs);

// tau(f, g) from the normal derivative samples of f and trace samples of g.
double tau_bilinear(const BoundaryMesh& mesh, const Conductivity& cond, const Vec& dnu_f,
                    const Vec& trace_g);
double tau_bilinear(const BoundaryMesh& mesh, const DensitySolver& solver, const Vec& dnu_f,
                    const Vec& trace_g);

// Fundamental solution Gamma(x) = log|x| / (2 pi) and its derivatives.
double gamma_value(const Vec2& x);
// Values Gamma(x_i - p) on the mesh.
Vec gamma_trace(const BoundaryMesh& mesh, const Vec2& p);
// Normal derivative d/dnu_x Gamma(x_i - p) on the mesh.
Vec gamma_normal_derivative(const BoundaryMesh& mesh, const Vec2& p);
// Mixed partial d^alpha Gamma at x (closed form via complex powers).
double gamma_partial(const std::array<int, 2>& alpha, const Vec2& x);

// Single layer potential S_D[phi](x) for x off the boundary (diagnostics).
double single_layer(const BoundaryMesh& mesh, const Vec& phi, const Vec2& x);

// Multistatic perturbation matrix V with V(s, r) = tau(Gamma_s, Gamma_r).
// Sources and receivers are N x 2 point lists kept further than one mesh
// spacing from the boundary.
Mat simulate_msr(const BoundaryMesh& mesh, const Conductivity& cond, const Mat& sources,
                 const Mat& receivers);

}  // namespace esense
