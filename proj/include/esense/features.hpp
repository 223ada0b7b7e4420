// Feature matrices of the boundary bilinear form: values of tau on pairs of
// scaling atoms (sparse, boundary-local) and on pairs of monomials (dense,
// low order), plus the non-adaptive band mask and approximation diagnostics
// used to study how much of the form survives truncation.
#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "esense/bem.hpp"
#include "esense/geometry.hpp"
#include "esense/types.hpp"
#include "esense/wavelet.hpp"

namespace esense {

// Smooth scalar field with an analytic gradient, the test-function side of
// the bilinear form.
struct TestField {
  std::function<double(const Vec2&)> value;
  std::function<Vec2(const Vec2&)> gradient;

  static TestField constant(double c);
  static TestField monomial(int a0, int a1);
  static TestField gaussian(const Vec2& center, double width);
};

// entries(i, j) = tau(phi_{L,n(i)}, phi_{L,n(j)}) over the flat row-major
// index space of `grid`. Rows and columns of atoms whose support misses the
// boundary are identically zero and are never assembled; `touching` lists
// the flat indices that were.
struct WaveletFeatureMatrix {
  WaveletGrid grid;
  SpMat entries;
  std::vector<int> touching;
};

// Requires at least 8 mesh nodes per atom-support crossing
// (mesh_spacing <= S 2^L / 8); throws std::invalid_argument otherwise.
WaveletFeatureMatrix assemble_wavelet_matrix(const BoundaryMesh& mesh,
                                             const DensitySolver& solver,
                                             const WaveletGrid& grid, const ScalingTable& table);
WaveletFeatureMatrix assemble_wavelet_matrix(const BoundaryMesh& mesh, const Conductivity& cond,
                                             const WaveletGrid& grid, const ScalingTable& table);

// Multi-indices with 1 <= |alpha| <= order in graded-lexicographic order;
// the shared row/column indexing of every polynomial-basis object.
std::vector<std::array<int, 2>> polynomial_exponents(int order);

// tau on monomial pairs x^alpha, x^beta for 1 <= |alpha|, |beta| <= order,
// graded-lexicographic exponent order.
struct PolynomialFeatureMatrix {
  int order = 0;
  std::vector<std::array<int, 2>> exponents;
  Mat entries;
};

PolynomialFeatureMatrix assemble_polynomial_matrix(const BoundaryMesh& mesh,
                                                   const Conductivity& cond, int order);

// Non-adaptive pair mask: (i, j) allowed iff the atom anchors differ by at
// most half_width in the lattice sup-metric. Depends only on the grid and
// half_width, never on the inclusion.
struct BandMask {
  WaveletGrid grid;
  int half_width = 0;

  bool allows(int i, int j) const;
  long allowed_count() const;
  double density() const;
  // All allowed pairs, first index major.
  std::vector<std::pair<int, int>> pairs() const;
};

BandMask build_band_mask(const WaveletGrid& grid, int half_width);

// Largest singular value by power iteration on the normal operator,
// deterministic start.
double spectral_norm(const SpMat& m, int max_iters = 500, double tol = 1e-10);

struct NormScaling {
  double slope = 0.0;         // least-squares slope of log2 ||X||_2 vs -level
  std::vector<double> norms;  // one per input matrix
};

NormScaling spectral_norm_scaling(const std::vector<const WaveletFeatureMatrix*>& mats);

// ||X - mask o X||_F / ||X||_F.
double masked_relative_error(const WaveletFeatureMatrix& x, const BandMask& mask);

// Relative Frobenius error after keeping only the `keep` largest-magnitude
// stored entries.
double n_term_relative_error(const WaveletFeatureMatrix& x, long keep);

// gamma_f' X gamma_g with coefficient vectors of f and g computed on the
// matrix's own grid from a lattice of depth max(8, 6 - level).
double projected_tau(const WaveletFeatureMatrix& x, const TestField& f, const TestField& g,
                     const ScalingFilter& filter);

// |tau(P_L f, P_L g) - tau(f, g)| for each requested level, where the
// projected value goes through coefficient vectors and the atom-pair matrix
// on support_grid(omega, L) and the reference is tau on the analytic fields.
std::vector<double> truncation_decay(const BoundaryMesh& mesh, const Conductivity& cond,
                                     const TestField& f, const TestField& g, const Box2& omega,
                                     const std::vector<int>& levels, const ScalingTable& table);

}  // namespace esense
