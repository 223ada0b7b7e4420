// Boundary images rendered from a wavelet feature matrix (diagonal and
// row-maximum renderings) or directly from multistatic data, plus a
// quantile-based localization score against a reference curve.
#pragma once

#include <array>
#include <string>

#include "esense/geometry.hpp"
#include "esense/sensing.hpp"
#include "esense/types.hpp"
#include "esense/wavelet.hpp"

namespace esense {

// A raster of nonnegative intensities attached to a rectangular pixel
// lattice: pixel (i, j) is centered at origin + (i spacing[0], j spacing[1]).
// Wavelet-derived images have one pixel per atom anchored inside the grid
// window (so the frame is the window lattice, e.g. 64x64 at level -5 over
// [-1,1]^2, regardless of support margins on the input lattice), centered at
// the atom mass centers 2^L (n + center_offset); `level` records the scale
// and `lo` the anchor of pixel (0, 0). Images taken directly from data live
// on the transmitter lattice and carry level = 0.
struct BoundaryImage {
  Mat intensity;  // pixel (i, j) at entry (i, j); always >= 0
  Vec2 origin = Vec2::Zero();
  Vec2 spacing = Vec2::Ones();
  int level = 0;
  std::array<long, 2> lo = {0, 0};
  std::string method;

  Vec2 pixel_center(Eigen::Index i, Eigen::Index j) const {
    return origin + Vec2(i * spacing[0], j * spacing[1]);
  }
  double total() const { return intensity.sum(); }
};

// Where a row's maximal entry is deposited: at the maximizing column's pixel
// (absorbing every row onto its strongest partner, the default) or at the
// row's own pixel.
enum class MaxImageVariant { Maximizer, Row };

// I(n) = |X_{n,n}| for every anchor n inside the window lattice.
// `center_offset` is the atom mass-center offset in lattice units (pass
// ScalingTable::first_moment). Throws std::invalid_argument when x is not
// square of the lattice size.
BoundaryImage image_by_diagonal(const SpMat& x, const WaveletGrid& atoms, double center_offset);

// For each row n with a nonzero entry: n* = argmax_{n'} |X_{n,n'}| (ties
// resolved to the smallest column index) contributes |X_{n,n*}| to the pixel
// of n* (Maximizer) or of n (Row); contributions landing outside the window
// lattice are dropped. All-zero rows contribute nothing, so on a margin-free
// lattice the total image intensity is exactly sum_n max_{n'} |X_{n,n'}|.
BoundaryImage image_by_maximum(const SpMat& x, const WaveletGrid& atoms, double center_offset,
                               MaxImageVariant variant = MaxImageVariant::Maximizer);

// Pixel at transmitter cell s gets |V_ss|; cells removed by a standoff stay
// zero. Requires a coincident near-field grid layout and matching data
// dimensions (std::invalid_argument otherwise).
BoundaryImage image_direct_msr(const MsrMatrix& v, const MeasurementSystem& sys);

struct LocalizationScore {
  double hit_fraction = 0.0;  // in [0, 1]
  double quantile = 0.0;      // q used
  double pixel_distance = 0.0;  // d used
  int top_count = 0;          // pixels actually scored
};

// Fraction of the ceil(q * pixel count) strongest strictly positive pixels
// whose center lies within d pixel pitches of the curve (ties broken toward
// the smaller linearized index; fewer positive pixels than requested scores
// just those). Requires q in (0, 1/2] and d >= 1; an all-zero image scores 0.
LocalizationScore localization_score(const BoundaryImage& img, const ParametricShape& shape,
                                     double q, double d);

}  // namespace esense
