#include "esense/bem.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace esense {

namespace {

void check_lambda(double lambda) {
  if (std::abs(lambda) <= 0.5 + 1e-12) {
    std::ostringstream msg;
    msg << "contrast maps to lambda = " << lambda
        << " inside the essential spectrum [-1/2, 1/2]; transmission problem is ill-posed";
    throw std::domain_error(msg.str());
  }
}

}  // namespace

Conductivity Conductivity::from_contrast(double k) {
  if (!(k > 0.0)) {
    throw std::domain_error("conductivity contrast must be positive");
  }
  if (k == 1.0) {
    throw std::domain_error("contrast k = 1 matches the background; nothing to sense");
  }
  Conductivity c;
  c.k = k;
  c.lambda = (k + 1.0) / (2.0 * (k - 1.0));
  check_lambda(c.lambda);
  return c;
}

NpMatrix assemble_np(const BoundaryMesh& mesh) {
  const int m = mesh.size();
  NpMatrix np;
  np.op.resize(m, m);
  for (int i = 0; i < m; ++i) {
    const Vec2 xi = mesh.at(i);
    const Vec2 ni = mesh.normal(i);
    for (int j = 0; j < m; ++j) {
      if (j == i) {
        // Limit of the kernel along the curve: half the curvature over 2 pi.
        np.op(i, i) = mesh.curvature(i) / (4.0 * kPi) * mesh.weights(i);
        continue;
      }
      const Vec2 d = xi - mesh.at(j);
      const double r2 = d.squaredNorm();
      np.op(i, j) = d.dot(ni) / (kTwoPi * r2) * mesh.weights(j);
    }
  }
  return np;
}

Vec np_apply(const NpMatrix& np, const Vec& f) { return np.op * f; }

Eigen::VectorXcd np_spectrum(const NpMatrix& np) {
  Eigen::EigenSolver<Mat> es(np.op, /*computeEigenvectors=*/false);
  return es.eigenvalues();
}

DensitySolver::DensitySolver(const NpMatrix& np, const Conductivity& cond)
    : lambda_(cond.lambda) {
  check_lambda(lambda_);
  const int m = np.size();
  Mat system = -np.op;
  system.diagonal().array() += lambda_;
  lu_.compute(system);
  (void)m;
}

Vec DensitySolver::solve(const Vec& rhs) const { return lu_.solve(rhs); }

Mat DensitySolver::solve(const Mat& rhs) const { return lu_.solve(rhs); }

Vec solve_density(const NpMatrix& np, const Conductivity& cond, const Vec& rhs) {
  DensitySolver solver(np, cond);
  Vec phi = solver.solve(rhs);
  const double residual = (cond.lambda * phi - np.op * phi - rhs).norm();
  const double scale = std::max(rhs.norm(), 1.0);
  if (!(residual <= 1e-10 * scale)) {
    std::ostringstream msg;
    msg << "density solve did not converge: residual " << residual << " vs rhs norm "
        << rhs.norm();
    throw std::runtime_error(msg.str());
  }
  return phi;
}

double tau_bilinear(const BoundaryMesh& mesh, const Conductivity& cond, const Vec& dnu_f,
                    const Vec& trace_g) {
  NpMatrix np = assemble_np(mesh);
  DensitySolver solver(np, cond);
  return tau_bilinear(mesh, solver, dnu_f, trace_g);
}

double tau_bilinear(const BoundaryMesh& mesh, const DensitySolver& solver, const Vec& dnu_f,
                    const Vec& trace_g) {
  const Vec phi = solver.solve(dnu_f);
  return (trace_g.array() * phi.array() * mesh.weights.array()).sum();
}

double gamma_value(const Vec2& x) { return std::log(x.norm()) / kTwoPi; }

Vec gamma_trace(const BoundaryMesh& mesh, const Vec2& p) {
  const int m = mesh.size();
  Vec out(m);
  for (int i = 0; i < m; ++i) {
    out(i) = gamma_value(Vec2(mesh.at(i) - p));
  }
  return out;
}

Vec gamma_normal_derivative(const BoundaryMesh& mesh, const Vec2& p) {
  const int m = mesh.size();
  Vec out(m);
  for (int i = 0; i < m; ++i) {
    const Vec2 d = mesh.at(i) - p;
    out(i) = d.dot(mesh.normal(i)) / (kTwoPi * d.squaredNorm());
  }
  return out;
}

double gamma_partial(const std::array<int, 2>& alpha, const Vec2& x) {
  const int order = alpha[0] + alpha[1];
  if (order == 0) {
    return gamma_value(x);
  }
  // d^alpha log|x| = Re[ i^{a2} (-1)^{order-1} (order-1)! (x1 + i x2)^{-order} ].
  const std::complex<double> z(x(0), x(1));
  std::complex<double> rot(1.0, 0.0);
  for (int n = 0; n < alpha[1]; ++n) {
    rot *= std::complex<double>(0.0, 1.0);
  }
  double fact = 1.0;
  for (int n = 2; n < order; ++n) {
    fact *= n;
  }
  const double sign = (order % 2 == 0) ? -1.0 : 1.0;
  const std::complex<double> val = rot * sign * fact * std::pow(z, -order);
  return val.real() / kTwoPi;
}

double single_layer(const BoundaryMesh& mesh, const Vec& phi, const Vec2& x) {
  double acc = 0.0;
  for (int i = 0; i < mesh.size(); ++i) {
    acc += gamma_value(Vec2(x - mesh.at(i))) * phi(i) * mesh.weights(i);
  }
  return acc;
}

Mat simulate_msr(const BoundaryMesh& mesh, const Conductivity& cond, const Mat& sources,
                 const Mat& receivers) {
  if (sources.cols() != 2 || receivers.cols() != 2) {
    throw std::invalid_argument("source and receiver lists must be N x 2");
  }
  const double h = mesh.mesh_spacing();
  auto check_standoff = [&](const Mat& pts, const char* label) {
    for (int s = 0; s < pts.rows(); ++s) {
      double dmin = std::numeric_limits<double>::infinity();
      for (int i = 0; i < mesh.size(); ++i) {
        dmin = std::min(dmin, (Vec2(pts.row(s)) - mesh.at(i)).norm());
      }
      if (dmin <= h) {
        std::ostringstream msg;
        msg << label << " " << s << " is within one mesh spacing (" << h
            << ") of the boundary (distance " << dmin
            << "); refine the mesh or move the point";
        throw std::invalid_argument(msg.str());
      }
    }
  };
  check_standoff(sources, "source");
  check_standoff(receivers, "receiver");

  const int ns = static_cast<int>(sources.rows());
  const int nr = static_cast<int>(receivers.rows());
  const int m = mesh.size();

  NpMatrix np = assemble_np(mesh);
  DensitySolver solver(np, cond);

  // Columns of Dnu are the normal-derivative data of each source field.
  Mat dnu(m, ns);
  for (int s = 0; s < ns; ++s) {
    dnu.col(s) = gamma_normal_derivative(mesh, Vec2(sources.row(s)));
  }
  Mat densities = solver.solve(dnu);  // (lambda I - K)^{-1} per source

  Mat traces(m, nr);
  for (int r = 0; r < nr; ++r) {
    traces.col(r) = gamma_trace(mesh, Vec2(receivers.row(r)));
  }

  // V(s, r) = sum_i traces(i, r) densities(i, s) w_i.
  Mat weighted = densities.array().colwise() * mesh.weights.array();
  return weighted.transpose() * traces;
}

}  // namespace esense
