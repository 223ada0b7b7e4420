#include "esense/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace esense {

namespace {

// Window lattice the pixels live on, plus a blank image over it.
BoundaryImage blank_image(const WaveletGrid& atoms, double center_offset, const char* method) {
  const WaveletGrid window = make_grid(atoms.omega, atoms.level);
  const double h = std::pow(2.0, atoms.level);
  BoundaryImage img;
  img.intensity = Mat::Zero(window.count[0], window.count[1]);
  img.origin = Vec2((window.lo[0] + center_offset) * h, (window.lo[1] + center_offset) * h);
  img.spacing = Vec2(h, h);
  img.level = atoms.level;
  img.lo = window.lo;
  img.method = method;
  return img;
}

void check_square(const SpMat& x, const WaveletGrid& atoms) {
  if (x.rows() != atoms.size() || x.cols() != atoms.size())
    throw std::invalid_argument("feature matrix does not match the atom lattice");
}

// Deposit |value| at the pixel of lattice index idx if it is in frame.
void deposit(BoundaryImage& img, const WaveletGrid& atoms, int idx, double value) {
  const auto n = atoms.anchor(idx);
  const long i = n[0] - img.lo[0];
  const long j = n[1] - img.lo[1];
  if (i < 0 || i >= img.intensity.rows() || j < 0 || j >= img.intensity.cols()) return;
  img.intensity(i, j) += value;
}

}  // namespace

BoundaryImage image_by_diagonal(const SpMat& x, const WaveletGrid& atoms, double center_offset) {
  check_square(x, atoms);
  BoundaryImage img = blank_image(atoms, center_offset, "diagonal");
  for (int idx = 0; idx < atoms.size(); ++idx) {
    const double value = std::abs(x.coeff(idx, idx));
    if (value > 0.0) deposit(img, atoms, idx, value);
  }
  return img;
}

BoundaryImage image_by_maximum(const SpMat& x, const WaveletGrid& atoms, double center_offset,
                               MaxImageVariant variant) {
  check_square(x, atoms);
  BoundaryImage img = blank_image(atoms, center_offset, "maximum");
  for (int row = 0; row < x.outerSize(); ++row) {
    double best = 0.0;
    int best_col = -1;
    for (SpMat::InnerIterator it(x, row); it; ++it) {
      const double value = std::abs(it.value());
      if (value > best) {  // strict: ties keep the smallest column index
        best = value;
        best_col = static_cast<int>(it.col());
      }
    }
    if (best_col < 0) continue;
    deposit(img, atoms, variant == MaxImageVariant::Maximizer ? best_col : row, best);
  }
  return img;
}

BoundaryImage image_direct_msr(const MsrMatrix& v, const MeasurementSystem& sys) {
  if (sys.layout != Layout::NearGrid || !sys.coincident || sys.per_axis < 1)
    throw std::invalid_argument("direct imaging requires a coincident near-field grid");
  if (v.entries.rows() != sys.num_sources() || v.entries.cols() != sys.num_receivers())
    throw std::invalid_argument("data dimensions do not match the measurement system");
  const Vec2 cell(sys.box.width(0) / sys.per_axis, sys.box.width(1) / sys.per_axis);
  BoundaryImage img;
  img.intensity = Mat::Zero(sys.per_axis, sys.per_axis);
  img.origin = sys.box.lo + 0.5 * cell;
  img.spacing = cell;
  img.level = 0;
  img.lo = {0, 0};
  img.method = "direct";
  for (int s = 0; s < sys.num_sources(); ++s) {
    const long i = std::lround((sys.sources(s, 0) - sys.box.lo[0]) / cell[0] - 0.5);
    const long j = std::lround((sys.sources(s, 1) - sys.box.lo[1]) / cell[1] - 0.5);
    if (i < 0 || i >= sys.per_axis || j < 0 || j >= sys.per_axis)
      throw std::invalid_argument("source does not sit on the transmitter lattice");
    img.intensity(i, j) = std::abs(v.entries(s, s));
  }
  return img;
}

LocalizationScore localization_score(const BoundaryImage& img, const ParametricShape& shape,
                                     double q, double d) {
  if (!(q > 0.0 && q <= 0.5)) throw std::invalid_argument("quantile must lie in (0, 1/2]");
  if (!(d >= 1.0)) throw std::invalid_argument("pixel distance must be at least 1");
  const Eigen::Index rows = img.intensity.rows();
  const Eigen::Index cols = img.intensity.cols();
  std::vector<std::pair<double, Eigen::Index>> positive;
  positive.reserve(static_cast<std::size_t>(rows * cols));
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (img.intensity(i, j) > 0.0) positive.emplace_back(img.intensity(i, j), i * cols + j);

  LocalizationScore score;
  score.quantile = q;
  score.pixel_distance = d;
  if (positive.empty()) return score;

  const auto requested = static_cast<std::size_t>(std::ceil(q * static_cast<double>(rows * cols)));
  const std::size_t top = std::min(requested, positive.size());
  std::partial_sort(positive.begin(), positive.begin() + static_cast<std::ptrdiff_t>(top),
                    positive.end(), [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first : a.second < b.second;
                    });

  const double reach = d * std::max(img.spacing[0], img.spacing[1]);
  int hits = 0;
  for (std::size_t k = 0; k < top; ++k) {
    const Eigen::Index i = positive[k].second / cols;
    const Eigen::Index j = positive[k].second % cols;
    if (distance_to_curve(shape, img.pixel_center(i, j)) <= reach) ++hits;
  }
  score.hit_fraction = static_cast<double>(hits) / static_cast<double>(top);
  score.top_count = static_cast<int>(top);
  return score;
}

}  // namespace esense
