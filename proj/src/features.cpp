#include "esense/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace esense {

namespace {

// Entries below this are structural zeros of the assembled sparse matrix.
constexpr double kDropTolerance = 1e-14;

double int_pow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

// Flat indices of the atoms whose support box meets a mesh node. An atom
// whose support clips the curve strictly between two adjacent nodes is
// missed, but with >= 8 nodes per support width such an atom only grazes
// the boundary near a support corner, where the atom vanishes.
std::vector<int> touching_atoms(const BoundaryMesh& mesh, const WaveletGrid& grid, int support) {
  std::vector<char> mark(grid.size(), 0);
  const double inv = std::ldexp(1.0, -grid.level);
  for (int i = 0; i < mesh.size(); ++i) {
    const Vec2 x = mesh.at(i);
    const long c0 = static_cast<long>(std::floor(x[0] * inv));
    const long c1 = static_cast<long>(std::floor(x[1] * inv));
    for (long n0 = c0 - support + 1; n0 <= c0; ++n0) {
      for (long n1 = c1 - support + 1; n1 <= c1; ++n1) {
        const std::array<long, 2> n{n0, n1};
        if (grid.contains(n)) mark[grid.flat(n)] = 1;
      }
    }
  }
  std::vector<int> out;
  for (int i = 0; i < grid.size(); ++i) {
    if (mark[i]) out.push_back(i);
  }
  return out;
}

// tau on all column pairs of (dnu, tr): one density solve per column of dnu,
// then a weighted inner product against every trace column.
Mat bilinear_block(const BoundaryMesh& mesh, const DensitySolver& solver, const Mat& dnu,
                   const Mat& tr) {
  const Mat density = solver.solve(dnu);
  const Mat weighted = mesh.weights.asDiagonal() * tr;
  return density.transpose() * weighted;
}

}  // namespace

TestField TestField::constant(double c) {
  TestField f;
  f.value = [c](const Vec2&) { return c; };
  f.gradient = [](const Vec2&) -> Vec2 { return Vec2::Zero(); };
  return f;
}

TestField TestField::monomial(int a0, int a1) {
  if (a0 < 0 || a1 < 0) {
    throw std::invalid_argument("monomial exponents must be nonnegative");
  }
  TestField f;
  f.value = [a0, a1](const Vec2& x) { return int_pow(x[0], a0) * int_pow(x[1], a1); };
  f.gradient = [a0, a1](const Vec2& x) -> Vec2 {
    const double gx = a0 == 0 ? 0.0 : a0 * int_pow(x[0], a0 - 1) * int_pow(x[1], a1);
    const double gy = a1 == 0 ? 0.0 : a1 * int_pow(x[0], a0) * int_pow(x[1], a1 - 1);
    return {gx, gy};
  };
  return f;
}

TestField TestField::gaussian(const Vec2& center, double width) {
  if (!(width > 0.0)) {
    throw std::invalid_argument("gaussian width must be positive");
  }
  TestField f;
  f.value = [center, width](const Vec2& x) {
    return std::exp(-(x - center).squaredNorm() / (2.0 * width * width));
  };
  f.gradient = [center, width](const Vec2& x) -> Vec2 {
    const double v = std::exp(-(x - center).squaredNorm() / (2.0 * width * width));
    return (-v / (width * width)) * (x - center);
  };
  return f;
}

WaveletFeatureMatrix assemble_wavelet_matrix(const BoundaryMesh& mesh,
                                             const DensitySolver& solver,
                                             const WaveletGrid& grid, const ScalingTable& table) {
  const int support = table.filter.support();
  const double side = std::ldexp(static_cast<double>(support), grid.level);
  if (mesh.mesh_spacing() > side / 8.0) {
    throw std::invalid_argument(
        "mesh too coarse for the atom level: need >= 8 nodes per support width");
  }

  WaveletFeatureMatrix out;
  out.grid = grid;
  out.touching = touching_atoms(mesh, grid, support);

  const int nb = static_cast<int>(out.touching.size());
  const int m = mesh.size();
  Mat dnu(m, nb);
  Mat tr(m, nb);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < nb; ++b) {
    const std::array<long, 2> n = out.grid.anchor(out.touching[b]);
    for (int i = 0; i < m; ++i) {
      const Vec2 x = mesh.at(i);
      tr(i, b) = eval_phi2d(table, grid.level, n, x);
      dnu(i, b) = grad_phi2d(table, grid.level, n, x).dot(mesh.normal(i));
    }
  }

  const Mat block = bilinear_block(mesh, solver, dnu, tr);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(block.size()) / 4);
  for (int r = 0; r < nb; ++r) {
    for (int c = 0; c < nb; ++c) {
      if (std::abs(block(r, c)) >= kDropTolerance) {
        trips.emplace_back(out.touching[r], out.touching[c], block(r, c));
      }
    }
  }
  out.entries.resize(grid.size(), grid.size());
  out.entries.setFromTriplets(trips.begin(), trips.end());
  out.entries.makeCompressed();
  return out;
}

WaveletFeatureMatrix assemble_wavelet_matrix(const BoundaryMesh& mesh, const Conductivity& cond,
                                             const WaveletGrid& grid, const ScalingTable& table) {
  const NpMatrix np = assemble_np(mesh);
  const DensitySolver solver(np, cond);
  return assemble_wavelet_matrix(mesh, solver, grid, table);
}

std::vector<std::array<int, 2>> polynomial_exponents(int order) {
  if (order < 1) {
    throw std::invalid_argument("polynomial feature order must be >= 1");
  }
  std::vector<std::array<int, 2>> out;
  for (int d = 1; d <= order; ++d) {
    for (int a0 = d; a0 >= 0; --a0) {
      out.push_back({a0, d - a0});
    }
  }
  return out;
}

PolynomialFeatureMatrix assemble_polynomial_matrix(const BoundaryMesh& mesh,
                                                   const Conductivity& cond, int order) {
  PolynomialFeatureMatrix out;
  out.order = order;
  out.exponents = polynomial_exponents(order);

  const int np_count = static_cast<int>(out.exponents.size());
  const int m = mesh.size();
  Mat dnu(m, np_count);
  Mat tr(m, np_count);
  for (int c = 0; c < np_count; ++c) {
    const TestField f = TestField::monomial(out.exponents[c][0], out.exponents[c][1]);
    for (int i = 0; i < m; ++i) {
      const Vec2 x = mesh.at(i);
      tr(i, c) = f.value(x);
      dnu(i, c) = f.gradient(x).dot(mesh.normal(i));
    }
  }

  const NpMatrix np = assemble_np(mesh);
  const DensitySolver solver(np, cond);
  out.entries = bilinear_block(mesh, solver, dnu, tr);
  return out;
}

bool BandMask::allows(int i, int j) const {
  const std::array<long, 2> a = grid.anchor(i);
  const std::array<long, 2> b = grid.anchor(j);
  return std::labs(a[0] - b[0]) <= half_width && std::labs(a[1] - b[1]) <= half_width;
}

long BandMask::allowed_count() const {
  // Pairs factor per axis: |{(a, b) in [0, g)^2 : |a - b| <= w}| for each.
  const auto axis_pairs = [this](int count) {
    const long g = count;
    const long w = std::min<long>(half_width, g - 1);
    return g * (2 * w + 1) - w * (w + 1);
  };
  return axis_pairs(grid.count[0]) * axis_pairs(grid.count[1]);
}

double BandMask::density() const {
  const double total = static_cast<double>(grid.size()) * static_cast<double>(grid.size());
  return total == 0.0 ? 0.0 : static_cast<double>(allowed_count()) / total;
}

std::vector<std::pair<int, int>> BandMask::pairs() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<size_t>(allowed_count()));
  for (int i = 0; i < grid.size(); ++i) {
    const std::array<long, 2> a = grid.anchor(i);
    for (long d0 = -half_width; d0 <= half_width; ++d0) {
      for (long d1 = -half_width; d1 <= half_width; ++d1) {
        const std::array<long, 2> b{a[0] + d0, a[1] + d1};
        if (grid.contains(b)) out.emplace_back(i, grid.flat(b));
      }
    }
  }
  return out;
}

BandMask build_band_mask(const WaveletGrid& grid, int half_width) {
  if (half_width < 0) {
    throw std::invalid_argument("band mask half width must be nonnegative");
  }
  return {grid, half_width};
}

double spectral_norm(const SpMat& m, int max_iters, double tol) {
  if (m.rows() == 0 || m.cols() == 0 || m.nonZeros() == 0) return 0.0;
  Vec v = Vec::Ones(m.cols()) + Vec::LinSpaced(m.cols(), 0.0, 1.0);
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    const Vec u = m * v;
    const double s = u.norm();
    if (s == 0.0) return 0.0;
    const Vec w = m.transpose() * u;
    const double wn = w.norm();
    if (wn == 0.0) return s;
    v = w / wn;
    const bool settled = std::abs(s - sigma) <= tol * s;
    sigma = s;
    if (settled) break;
  }
  return sigma;
}

NormScaling spectral_norm_scaling(const std::vector<const WaveletFeatureMatrix*>& mats) {
  if (mats.size() < 2) {
    throw std::invalid_argument("norm scaling needs at least two levels");
  }
  NormScaling out;
  Vec xs(mats.size());
  Vec ys(mats.size());
  for (size_t i = 0; i < mats.size(); ++i) {
    const double norm = spectral_norm(mats[i]->entries);
    if (!(norm > 0.0)) {
      throw std::invalid_argument("norm scaling needs nonzero matrices");
    }
    out.norms.push_back(norm);
    xs[static_cast<Eigen::Index>(i)] = -static_cast<double>(mats[i]->grid.level);
    ys[static_cast<Eigen::Index>(i)] = std::log2(norm);
  }
  const double xbar = xs.mean();
  const double ybar = ys.mean();
  const Vec dx = xs.array() - xbar;
  const Vec dy = ys.array() - ybar;
  const double denom = dx.squaredNorm();
  if (denom == 0.0) {
    throw std::invalid_argument("norm scaling needs at least two distinct levels");
  }
  out.slope = dx.dot(dy) / denom;
  return out;
}

double masked_relative_error(const WaveletFeatureMatrix& x, const BandMask& mask) {
  double total = 0.0;
  double removed = 0.0;
  for (int r = 0; r < x.entries.outerSize(); ++r) {
    for (SpMat::InnerIterator it(x.entries, r); it; ++it) {
      const double v2 = it.value() * it.value();
      total += v2;
      if (!mask.allows(static_cast<int>(it.row()), static_cast<int>(it.col()))) removed += v2;
    }
  }
  return total == 0.0 ? 0.0 : std::sqrt(removed / total);
}

double n_term_relative_error(const WaveletFeatureMatrix& x, long keep) {
  if (keep < 0) {
    throw std::invalid_argument("n-term budget must be nonnegative");
  }
  std::vector<double> squares;
  squares.reserve(static_cast<size_t>(x.entries.nonZeros()));
  for (int r = 0; r < x.entries.outerSize(); ++r) {
    for (SpMat::InnerIterator it(x.entries, r); it; ++it) {
      squares.push_back(it.value() * it.value());
    }
  }
  if (keep >= static_cast<long>(squares.size())) return 0.0;
  // Ascending, so the discarded tail (everything but the `keep` largest) is
  // summed smallest-first.
  std::sort(squares.begin(), squares.end());
  const size_t drop = squares.size() - static_cast<size_t>(keep);
  double removed = 0.0;
  for (size_t i = 0; i < drop; ++i) removed += squares[i];
  const double total = std::accumulate(squares.begin(), squares.end(), 0.0);
  return total == 0.0 ? 0.0 : std::sqrt(removed / total);
}

double projected_tau(const WaveletFeatureMatrix& x, const TestField& f, const TestField& g,
                     const ScalingFilter& filter) {
  const int q = default_lattice_depth(x.grid.level);
  const TestField* fp = &f;
  const TestField* gp = &g;
  const Mat cf =
      field_coeffs([fp](double a, double b) { return fp->value(Vec2(a, b)); }, x.grid, q, filter);
  const Mat cg =
      field_coeffs([gp](double a, double b) { return gp->value(Vec2(a, b)); }, x.grid, q, filter);
  const Vec gamma_f = flatten_row_major(cf);
  const Vec gamma_g = flatten_row_major(cg);
  return gamma_f.dot(x.entries * gamma_g);
}

std::vector<double> truncation_decay(const BoundaryMesh& mesh, const Conductivity& cond,
                                     const TestField& f, const TestField& g, const Box2& omega,
                                     const std::vector<int>& levels, const ScalingTable& table) {
  const NpMatrix np = assemble_np(mesh);
  const DensitySolver solver(np, cond);

  const int m = mesh.size();
  Vec dnu_f(m);
  Vec tr_g(m);
  for (int i = 0; i < m; ++i) {
    const Vec2 x = mesh.at(i);
    dnu_f[i] = f.gradient(x).dot(mesh.normal(i));
    tr_g[i] = g.value(x);
  }
  const double reference = tau_bilinear(mesh, solver, dnu_f, tr_g);

  std::vector<double> errors;
  errors.reserve(levels.size());
  for (const int level : levels) {
    const WaveletGrid grid = support_grid(omega, level, table.filter.support());
    const WaveletFeatureMatrix x = assemble_wavelet_matrix(mesh, solver, grid, table);
    errors.push_back(std::abs(projected_tau(x, f, g, table.filter) - reference));
  }
  return errors;
}

}  // namespace esense
