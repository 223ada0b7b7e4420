// Compactly supported orthonormal scaling functions and windowed fast
// transforms on the integer lattice.
//
// Conventions, used consistently everywhere:
//  - Filters are min-phase with taps h[0..2p-1], sum h = sqrt(2); the
//    scaling function solves phi(x) = sqrt(2) sum_n h[n] phi(2x - n) and is
//    supported on [0, 2p - 1].
//  - Scale levels are signed integers L; the level-L atoms in 2D are
//    phi_{L,n}(x) = 2^{-L} phi(2^{-L}x_1 - n_1) phi(2^{-L}x_2 - n_2),
//    L2-normalized, anchored at lattice point n (support 2^L [n, n + S]).
//    More negative L means finer scale.
//  - One analysis step maps level-j coefficients a_j to
//    a_{j+1}[n] = sum_k h[k] a_j[2n + k] (per axis), so coefficients of
//    f sampled on the lattice 2^{-q} travel from level -q up to any L > -q
//    in L + q steps.
#pragma once

#include <array>
#include <functional>
#include <vector>

#include "esense/types.hpp"

namespace esense {

struct ScalingFilter {
  int order = 0;  // number of vanishing moments p
  Vec h;          // low-pass taps, length 2p
  Vec g;          // high-pass g[n] = (-1)^n h[2p-1-n]

  // p in {1, 6, 8, 10}; taps are hard-coded to 24 significant digits.
  static ScalingFilter daubechies(int p);

  int taps() const { return static_cast<int>(h.size()); }
  int support() const { return taps() - 1; }  // S = 2p - 1
};

// Values of the depth-k iterate of the refinement operator started from the
// box indicator, on its own dyadic grid: entry j is phi_k(j 2^{-k}),
// j = 0 .. S 2^k. Equals 2^{k/2} times the k-fold iterated filter, so its
// Riemann sums satisfy the filter-bank identities exactly: unit sum and
// mass, orthonormal integer shifts, exact partition of unity on the grid.
Vec cascade(const ScalingFilter& f, int depth);

// True derivative values phi'(j 2^{-k}): seeded by the eigenvector of the
// refinement matrix at the integers, then refined by the two-scale relation
// (exact up to roundoff). Requires p >= 3 so that phi is C^1; p = 1 gives
// zeros.
Vec derivative_table(const ScalingFilter& f, int depth);

// True phi values at the integers 0..S from the refinement eigenproblem,
// normalized by partition of unity.
Vec scaling_integer_values(const ScalingFilter& f);

struct ScalingTable {
  ScalingFilter filter;
  int depth = 12;       // values tabulated on the grid 2^{-depth}
  Vec phi;              // cascade(filter, depth)
  Vec psi;              // one high-pass step on the depth-1 table
  Vec dphi;             // derivative_table(filter, depth)
  double first_moment;  // integral of x phi(x) = sum_n n h[n] / sqrt(2)

  // Linear interpolation in the tables; zero outside [0, S].
  double phi_at(double x) const;
  double psi_at(double x) const;
  double dphi_at(double x) const;
};

ScalingTable build_scaling_table(const ScalingFilter& f, int depth = 12);

// A rectangular window of values attached to integer lattice coordinates:
// values(i, j) lives at lattice point (offset[0] + i, offset[1] + j).
struct LatticeWindow {
  std::array<long, 2> offset = {0, 0};
  Mat values;

  long lo(int axis) const { return offset[axis]; }
  long hi(int axis) const {  // inclusive
    return offset[axis] + (axis == 0 ? values.rows() : values.cols()) - 1;
  }
};

// Zero: treat samples outside the window as zeros and keep every output the
// window can influence (the window grows by the filter cone; exact for
// compactly supported data). Valid: keep only outputs whose every tap lies
// inside the window (no assumption on the data outside; the window shrinks).
enum class PadMode { Zero, Valid };

// One filter-and-downsample pass along one axis.
LatticeWindow dwt_axis(const LatticeWindow& in, const Vec& filt, int axis, PadMode pad);

struct AnalysisStep {
  LatticeWindow approx;     // h x h
  LatticeWindow detail_x;   // g along axis 0, h along axis 1
  LatticeWindow detail_y;   // h along axis 0, g along axis 1
  LatticeWindow detail_xy;  // g x g
};

AnalysisStep analysis_step(const LatticeWindow& in, const ScalingFilter& f, PadMode pad);

// Adjoint of the Zero-mode analysis step: upsample, filter, sum the four
// bands. Windows may carry different offsets; the result covers their union.
LatticeWindow synthesis_step(const AnalysisStep& bands, const ScalingFilter& f);

struct Fwt2 {
  LatticeWindow approx;                // coarsest level
  std::vector<AnalysisStep> details;   // details[l] from analysis level l
                                       // (finest first; approx member unused)
};

Fwt2 fwt2(const LatticeWindow& in, const ScalingFilter& f, int levels, PadMode pad);
LatticeWindow ifwt2(const Fwt2& t, const ScalingFilter& f);

// Inclusive lattice range [lo, hi] of level -q samples needed to produce the
// coefficient range [out_lo, out_hi] after `steps` Valid analysis steps.
std::array<long, 2> needed_input_range(long out_lo, long out_hi, int steps, int taps);

// Anchor window of level-L atoms attached to a box: all n with 2^L n in
// omega (half-open per axis). The window is a full integer rectangle.
struct WaveletGrid {
  Box2 omega;
  int level = -5;
  std::array<long, 2> lo = {0, 0};
  std::array<int, 2> count = {0, 0};

  int size() const { return count[0] * count[1]; }
  bool contains(const std::array<long, 2>& n) const {
    return n[0] >= lo[0] && n[0] < lo[0] + count[0] && n[1] >= lo[1] &&
           n[1] < lo[1] + count[1];
  }
  int flat(const std::array<long, 2>& n) const {
    return static_cast<int>((n[0] - lo[0]) * count[1] + (n[1] - lo[1]));
  }
  std::array<long, 2> anchor(int idx) const {
    return {lo[0] + idx / count[1], lo[1] + idx % count[1]};
  }
  // Same box, window widened on the low side by S cells per axis so that
  // every atom whose support meets the box is included.
  WaveletGrid with_support_margin(int support) const;
};

WaveletGrid make_grid(const Box2& omega, int level);

// Exact support-overlap window at level j: all n whose atom support
// 2^j [n, n + S] overlaps omega in positive measure.
WaveletGrid support_grid(const Box2& omega, int level, int support);

// Coefficient-lattice depth used when a caller does not pin one: at least 8
// dyadic levels, and at least six below the atom scale.
inline int default_lattice_depth(int level) { return level >= -2 ? 8 : 6 - level; }

// Coefficients <f, phi_{L,n}> for n in `grid`, from samples of f on the
// lattice 2^{-lattice_depth} (raw values; the quadrature weight is applied
// internally). The sample window must cover needed_input_range of the grid
// window; throws std::invalid_argument otherwise.
Mat scaling_coeffs(const LatticeWindow& samples, int lattice_depth, const WaveletGrid& grid,
                   const ScalingFilter& f);

// Coefficients <Gamma(. - src), phi_{L,n}> on the grid window. Samples the
// logarithmic kernel on exactly the needed lattice range; samples closer to
// src than 3 lattice spacings are replaced by the mean over the ring
// (3h, 4.5h] before the transform, which caps the singularity without
// touching coefficients away from the source.
Mat green_coeffs(const Vec2& src, const WaveletGrid& grid, int lattice_depth,
                 const ScalingFilter& f);

// Coefficients <field, phi_{L,n}> on the grid window for a smooth field,
// sampled on exactly the needed lattice range.
Mat field_coeffs(const std::function<double(double, double)>& field, const WaveletGrid& grid,
                 int lattice_depth, const ScalingFilter& f);

// Flattens a coefficient window (axis-0 index by row, axis-1 by column)
// into the row-major vector order used by WaveletGrid::flat.
Vec flatten_row_major(const Mat& m);

// Point evaluation of the L2-normalized 2D atom and its gradient.
double eval_phi2d(const ScalingTable& table, int level, const std::array<long, 2>& n,
                  const Vec2& x);
Vec2 grad_phi2d(const ScalingTable& table, int level, const std::array<long, 2>& n,
                const Vec2& x);

}  // namespace esense
