#include "esense/wavelet.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace esense {

namespace {

long div_floor(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) {
    --q;
  }
  return q;
}

long div_ceil(long a, long b) { return -div_floor(-a, b); }

// Min-phase orthonormal taps, 24 significant digits.
constexpr double kDb6[12] = {
    0.111540743350109463621324,   0.494623890398453085677204,
    0.751133908021095350678934,   0.31525035170919762908599,
    -0.226264693965439820076315,  -0.12976686756726193556229,
    0.0975016055873230491023436,  0.0275228655303057286255408,
    -0.0315820393174860295650791, 0.000553842201161496139251918,
    0.00477725751094551063963598, -0.00107730108530847956485262};

constexpr double kDb8[16] = {
    0.0544158422431040099550094,  0.312871590914299970659162,
    0.675630736297289806807801,   0.585354683654206712771266,
    -0.0158291052563493056673805, -0.284015542961546926516203,
    0.00047248457391328277036059, 0.128747426620478458857029,
    -0.0173693010018075461696161, -0.0440882539307947515067637,
    0.0139810279173982816487229,  0.00874609404740577671638274,
    -0.00487035299345157431042218, -0.00039174037337694704629808,
    0.000675449406450569366369548, -0.000117476784124769533730628};

constexpr double kDb10[20] = {
    0.0266700579005555535866174,   0.188176800077691489020893,
    0.527201188931725586481745,    0.688459039453603565741872,
    0.281172343660577460748727,    -0.249846424327315379416102,
    -0.195946274377377043504299,   0.127369340335793260082677,
    0.0930573646035723511603523,   -0.0713941471663970871453361,
    -0.0294575368218758128582832,  0.0332126740593410017397637,
    0.00360655356695616965542329,  -0.0107331754833305750443181,
    0.00139535174705290116578932,  0.00199240529518505611715874,
    -0.000685856694959711626561371, -0.000116466855129285450951481,
    0.0000935886703200695913340501, -0.0000132642028945212448124367};

// Real eigenvector of A for the eigenvalue closest to `target`.
Vec eigenvector_near(const Mat& a, double target) {
  Eigen::EigenSolver<Mat> es(a);
  int best = 0;
  double dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < a.rows(); ++i) {
    const double d = std::abs(es.eigenvalues()(i) - std::complex<double>(target, 0.0));
    if (d < dist) {
      dist = d;
      best = i;
    }
  }
  if (dist > 1e-8) {
    throw std::runtime_error("refinement eigenproblem: expected eigenvalue not found");
  }
  return es.eigenvectors().col(best).real();
}

}  // namespace

ScalingFilter ScalingFilter::daubechies(int p) {
  ScalingFilter f;
  f.order = p;
  switch (p) {
    case 1:
      f.h = Vec::Constant(2, 1.0 / std::numbers::sqrt2);
      break;
    case 6:
      f.h = Eigen::Map<const Vec>(kDb6, 12);
      break;
    case 8:
      f.h = Eigen::Map<const Vec>(kDb8, 16);
      break;
    case 10:
      f.h = Eigen::Map<const Vec>(kDb10, 20);
      break;
    default:
      throw std::invalid_argument("unsupported filter order (choose 1, 6, 8 or 10)");
  }
  const int n = f.taps();
  f.g.resize(n);
  for (int i = 0; i < n; ++i) {
    f.g(i) = ((i % 2 == 0) ? 1.0 : -1.0) * f.h(n - 1 - i);
  }
  return f;
}

Vec cascade(const ScalingFilter& f, int depth) {
  const int S = f.support();
  Vec cur = Vec::Zero(S + 1);
  cur(0) = 1.0;  // box indicator sampled at the integers
  for (int k = 1; k <= depth; ++k) {
    const long stride = 1L << (k - 1);
    const long prev_len = cur.size();
    Vec next = Vec::Zero(S * (1L << k) + 1);
    for (long m = 0; m < next.size(); ++m) {
      double acc = 0.0;
      for (int n = 0; n <= S; ++n) {
        const long j = m - n * stride;
        if (j >= 0 && j < prev_len) {
          acc += f.h(n) * cur(j);
        }
      }
      next(m) = std::numbers::sqrt2 * acc;
    }
    cur.swap(next);
  }
  return cur;
}

Vec scaling_integer_values(const ScalingFilter& f) {
  const int S = f.support();
  Vec v = Vec::Zero(S + 1);
  if (f.order == 1) {
    v(0) = 1.0;
    return v;
  }
  Mat a = Mat::Zero(S - 1, S - 1);
  for (int m = 1; m < S; ++m) {
    for (int n = 1; n < S; ++n) {
      const int idx = 2 * m - n;
      if (idx >= 0 && idx <= S) {
        a(m - 1, n - 1) = std::numbers::sqrt2 * f.h(idx);
      }
    }
  }
  Vec w = eigenvector_near(a, 1.0);
  w /= w.sum();  // partition of unity at the integers
  v.segment(1, S - 1) = w;
  return v;
}

Vec derivative_table(const ScalingFilter& f, int depth) {
  const int S = f.support();
  const long len = S * (1L << depth) + 1;
  if (f.order == 1) {
    return Vec::Zero(len);
  }
  Mat a = Mat::Zero(S - 1, S - 1);
  for (int m = 1; m < S; ++m) {
    for (int n = 1; n < S; ++n) {
      const int idx = 2 * m - n;
      if (idx >= 0 && idx <= S) {
        a(m - 1, n - 1) = 2.0 * std::numbers::sqrt2 * f.h(idx);
      }
    }
  }
  Vec w = eigenvector_near(a, 1.0);
  double moment = 0.0;  // sum_m m phi'(m) must equal -1
  for (int m = 1; m < S; ++m) {
    moment += m * w(m - 1);
  }
  w /= -moment;

  Vec cur = Vec::Zero(S + 1);
  cur.segment(1, S - 1) = w;
  for (int k = 1; k <= depth; ++k) {
    const long stride = 1L << (k - 1);
    const long prev_len = cur.size();
    Vec next = Vec::Zero(S * (1L << k) + 1);
    for (long m = 0; m < next.size(); ++m) {
      double acc = 0.0;
      for (int n = 0; n <= S; ++n) {
        const long j = m - n * stride;
        if (j >= 0 && j < prev_len) {
          acc += f.h(n) * cur(j);
        }
      }
      next(m) = 2.0 * std::numbers::sqrt2 * acc;
    }
    cur.swap(next);
  }
  return cur;
}

ScalingTable build_scaling_table(const ScalingFilter& f, int depth) {
  if (depth < 2 || depth > 20) {
    throw std::invalid_argument("table depth out of range");
  }
  ScalingTable t;
  t.filter = f;
  t.depth = depth;
  t.phi = cascade(f, depth);
  // One high-pass step on the depth-1 table lands psi on the depth grid.
  const Vec base = cascade(f, depth - 1);
  const int S = f.support();
  const long stride = 1L << (depth - 1);
  t.psi = Vec::Zero(S * (1L << depth) + 1);
  for (long m = 0; m < t.psi.size(); ++m) {
    double acc = 0.0;
    for (int n = 0; n <= S; ++n) {
      const long j = m - n * stride;
      if (j >= 0 && j < base.size()) {
        acc += f.g(n) * base(j);
      }
    }
    t.psi(m) = std::numbers::sqrt2 * acc;
  }
  t.dphi = derivative_table(f, depth);
  double fm = 0.0;
  for (int n = 0; n < f.taps(); ++n) {
    fm += n * f.h(n);
  }
  t.first_moment = fm / std::numbers::sqrt2;
  return t;
}

namespace {

double table_at(const Vec& table, int depth, int support, double x) {
  if (!(x >= 0.0) || !(x < support)) {
    return 0.0;
  }
  const double tpos = std::ldexp(x, depth);
  const long i = std::min(static_cast<long>(tpos), table.size() - 2);
  const double frac = tpos - static_cast<double>(i);
  return table(i) * (1.0 - frac) + table(i + 1) * frac;
}

}  // namespace

double ScalingTable::phi_at(double x) const {
  return table_at(phi, depth, filter.support(), x);
}

double ScalingTable::psi_at(double x) const {
  return table_at(psi, depth, filter.support(), x);
}

double ScalingTable::dphi_at(double x) const {
  return table_at(dphi, depth, filter.support(), x);
}

LatticeWindow dwt_axis(const LatticeWindow& in, const Vec& filt, int axis, PadMode pad) {
  const int taps = static_cast<int>(filt.size());
  const int S = taps - 1;
  const long ilo = in.lo(axis);
  const long ihi = in.hi(axis);
  long olo, ohi;
  if (pad == PadMode::Zero) {
    olo = div_ceil(ilo - S, 2);
    ohi = div_floor(ihi, 2);
  } else {
    olo = div_ceil(ilo, 2);
    ohi = div_floor(ihi - S, 2);
    if (ohi < olo) {
      throw std::invalid_argument("window too small for a valid analysis step");
    }
  }
  LatticeWindow out;
  out.offset = in.offset;
  out.offset[axis] = olo;
  if (axis == 0) {
    out.values = Mat::Zero(ohi - olo + 1, in.values.cols());
    for (long n = olo; n <= ohi; ++n) {
      auto row = out.values.row(n - olo);
      for (int k = 0; k < taps; ++k) {
        const long src = 2 * n + k - ilo;
        if (src >= 0 && src < in.values.rows()) {
          row += filt(k) * in.values.row(src);
        }
      }
    }
  } else {
    out.values = Mat::Zero(in.values.rows(), ohi - olo + 1);
    for (long n = olo; n <= ohi; ++n) {
      auto col = out.values.col(n - olo);
      for (int k = 0; k < taps; ++k) {
        const long src = 2 * n + k - ilo;
        if (src >= 0 && src < in.values.cols()) {
          col += filt(k) * in.values.col(src);
        }
      }
    }
  }
  return out;
}

AnalysisStep analysis_step(const LatticeWindow& in, const ScalingFilter& f, PadMode pad) {
  const LatticeWindow low = dwt_axis(in, f.h, 0, pad);
  const LatticeWindow high = dwt_axis(in, f.g, 0, pad);
  AnalysisStep st;
  st.approx = dwt_axis(low, f.h, 1, pad);
  st.detail_y = dwt_axis(low, f.g, 1, pad);
  st.detail_x = dwt_axis(high, f.h, 1, pad);
  st.detail_xy = dwt_axis(high, f.g, 1, pad);
  return st;
}

namespace {

// Adjoint of the Zero-mode dwt_axis: upsample by two and filter.
LatticeWindow idwt_axis(const LatticeWindow& in, const Vec& filt, int axis) {
  const int taps = static_cast<int>(filt.size());
  const int S = taps - 1;
  const long ilo = in.lo(axis);
  const long ihi = in.hi(axis);
  const long olo = 2 * ilo;
  const long ohi = 2 * ihi + S;
  LatticeWindow out;
  out.offset = in.offset;
  out.offset[axis] = olo;
  if (axis == 0) {
    out.values = Mat::Zero(ohi - olo + 1, in.values.cols());
    for (long n = ilo; n <= ihi; ++n) {
      for (int k = 0; k < taps; ++k) {
        out.values.row(2 * n + k - olo) += filt(k) * in.values.row(n - ilo);
      }
    }
  } else {
    out.values = Mat::Zero(in.values.rows(), ohi - olo + 1);
    for (long n = ilo; n <= ihi; ++n) {
      for (int k = 0; k < taps; ++k) {
        out.values.col(2 * n + k - olo) += filt(k) * in.values.col(n - ilo);
      }
    }
  }
  return out;
}

void accumulate(LatticeWindow& acc, const LatticeWindow& w) {
  acc.values.block(w.offset[0] - acc.offset[0], w.offset[1] - acc.offset[1],
                   w.values.rows(), w.values.cols()) += w.values;
}

}  // namespace

LatticeWindow synthesis_step(const AnalysisStep& bands, const ScalingFilter& f) {
  const LatticeWindow a = idwt_axis(idwt_axis(bands.approx, f.h, 1), f.h, 0);
  const LatticeWindow dx = idwt_axis(idwt_axis(bands.detail_x, f.h, 1), f.g, 0);
  const LatticeWindow dy = idwt_axis(idwt_axis(bands.detail_y, f.g, 1), f.h, 0);
  const LatticeWindow dxy = idwt_axis(idwt_axis(bands.detail_xy, f.g, 1), f.g, 0);

  LatticeWindow out;
  for (int axis = 0; axis < 2; ++axis) {
    out.offset[axis] = std::min(std::min(a.lo(axis), dx.lo(axis)),
                                std::min(dy.lo(axis), dxy.lo(axis)));
  }
  const long rows = std::max(std::max(a.hi(0), dx.hi(0)), std::max(dy.hi(0), dxy.hi(0))) -
                    out.offset[0] + 1;
  const long cols = std::max(std::max(a.hi(1), dx.hi(1)), std::max(dy.hi(1), dxy.hi(1))) -
                    out.offset[1] + 1;
  out.values = Mat::Zero(rows, cols);
  accumulate(out, a);
  accumulate(out, dx);
  accumulate(out, dy);
  accumulate(out, dxy);
  return out;
}

Fwt2 fwt2(const LatticeWindow& in, const ScalingFilter& f, int levels, PadMode pad) {
  if (levels < 1) {
    throw std::invalid_argument("transform needs at least one level");
  }
  Fwt2 t;
  LatticeWindow cur = in;
  for (int l = 0; l < levels; ++l) {
    AnalysisStep st = analysis_step(cur, f, pad);
    cur = st.approx;
    st.approx = LatticeWindow{};  // kept only at the bottom of the pyramid
    t.details.push_back(std::move(st));
  }
  t.approx = std::move(cur);
  return t;
}

LatticeWindow ifwt2(const Fwt2& t, const ScalingFilter& f) {
  LatticeWindow cur = t.approx;
  for (int l = static_cast<int>(t.details.size()) - 1; l >= 0; --l) {
    AnalysisStep bands = t.details[l];
    bands.approx = cur;
    cur = synthesis_step(bands, f);
  }
  return cur;
}

std::array<long, 2> needed_input_range(long out_lo, long out_hi, int steps, int taps) {
  const long scale = 1L << steps;
  const long S = taps - 1;
  return {out_lo * scale, out_hi * scale + S * (scale - 1)};
}

WaveletGrid WaveletGrid::with_support_margin(int support) const {
  WaveletGrid g = *this;
  for (int axis = 0; axis < 2; ++axis) {
    g.lo[axis] -= support;
    g.count[axis] += support;
  }
  return g;
}

WaveletGrid make_grid(const Box2& omega, int level) {
  WaveletGrid g;
  g.omega = omega;
  g.level = level;
  const double scale = std::ldexp(1.0, -level);
  for (int axis = 0; axis < 2; ++axis) {
    if (!(omega.hi(axis) > omega.lo(axis))) {
      throw std::invalid_argument("window box must have positive extent");
    }
    const long nlo = static_cast<long>(std::ceil(omega.lo(axis) * scale - 1e-9));
    const long nhi = static_cast<long>(std::ceil(omega.hi(axis) * scale - 1e-9)) - 1;
    if (nhi < nlo) {
      throw std::invalid_argument("window box is empty at this scale");
    }
    g.lo[axis] = nlo;
    g.count[axis] = static_cast<int>(nhi - nlo + 1);
  }
  return g;
}

WaveletGrid support_grid(const Box2& omega, int level, int support) {
  WaveletGrid g;
  g.omega = omega;
  g.level = level;
  const double scale = std::ldexp(1.0, -level);
  for (int axis = 0; axis < 2; ++axis) {
    // Positive-measure overlap of 2^level [n, n + support] with the box.
    const long nhi = static_cast<long>(std::ceil(omega.hi(axis) * scale - 1e-9)) - 1;
    const long nlo =
        static_cast<long>(std::floor(omega.lo(axis) * scale + 1e-9)) - support + 1;
    g.lo[axis] = nlo;
    g.count[axis] = static_cast<int>(nhi - nlo + 1);
  }
  return g;
}

namespace {

// Shared tail of the coefficient pipelines. Consumes a window that already
// holds the weighted samples 2^{-q} f(2^{-q} m).
Mat approx_to_grid(LatticeWindow&& cur, int steps, const WaveletGrid& grid,
                   const ScalingFilter& f) {
  for (int axis = 0; axis < 2; ++axis) {
    const auto need = needed_input_range(grid.lo[axis], grid.lo[axis] + grid.count[axis] - 1,
                                         steps, f.taps());
    if (cur.lo(axis) > need[0] || cur.hi(axis) < need[1]) {
      std::ostringstream msg;
      msg << "sample window [" << cur.lo(axis) << ", " << cur.hi(axis) << "] on axis "
          << axis << " does not cover the required range [" << need[0] << ", " << need[1]
          << "]";
      throw std::invalid_argument(msg.str());
    }
  }
  for (int l = 0; l < steps; ++l) {
    cur = dwt_axis(dwt_axis(cur, f.h, 0, PadMode::Valid), f.h, 1, PadMode::Valid);
  }
  return cur.values.block(grid.lo[0] - cur.offset[0], grid.lo[1] - cur.offset[1],
                          grid.count[0], grid.count[1]);
}

}  // namespace

Mat scaling_coeffs(const LatticeWindow& samples, int lattice_depth, const WaveletGrid& grid,
                   const ScalingFilter& f) {
  const int k = grid.level + lattice_depth;
  if (k < 0) {
    throw std::invalid_argument("sampling lattice is coarser than the target scale");
  }
  LatticeWindow cur;
  cur.offset = samples.offset;
  cur.values = samples.values * std::ldexp(1.0, -lattice_depth);
  return approx_to_grid(std::move(cur), k, grid, f);
}

Mat green_coeffs(const Vec2& src, const WaveletGrid& grid, int lattice_depth,
                 const ScalingFilter& f) {
  const int k = grid.level + lattice_depth;
  if (k < 0) {
    throw std::invalid_argument("sampling lattice is coarser than the target scale");
  }
  std::array<std::array<long, 2>, 2> range;
  for (int axis = 0; axis < 2; ++axis) {
    range[axis] = needed_input_range(grid.lo[axis], grid.lo[axis] + grid.count[axis] - 1, k,
                                     f.taps());
  }
  const double h = std::ldexp(1.0, -lattice_depth);
  // Quadrature weight h and the kernel constant folded into the sampling;
  // log sqrt = log / 2 turns 1/(2 pi) into 1/(4 pi).
  const double kernel_scale = h / (2.0 * kTwoPi);
  LatticeWindow samples;
  samples.offset = {range[0][0], range[1][0]};
  const long rows = range[0][1] - range[0][0] + 1;
  const long cols = range[1][1] - range[1][0] + 1;
  samples.values.resize(rows, cols);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < rows; ++i) {
    const double x0 = (range[0][0] + i) * h - src(0);
    for (long j = 0; j < cols; ++j) {
      const double x1 = (range[1][0] + j) * h - src(1);
      samples.values(i, j) = kernel_scale * std::log(x0 * x0 + x1 * x1);
    }
  }

  // Cap the logarithmic singularity: samples within 3h of the source become
  // the mean over the ring (3h, 4.5h]. Coefficients of atoms away from the
  // source are untouched.
  const double si = src(0) / h;
  const double sj = src(1) / h;
  const long ci = std::lround(si);
  const long cj = std::lround(sj);
  if (ci >= samples.lo(0) - 5 && ci <= samples.hi(0) + 5 && cj >= samples.lo(1) - 5 &&
      cj <= samples.hi(1) + 5) {
    double ring_sum = 0.0;
    long ring_count = 0;
    for (long di = -6; di <= 6; ++di) {
      for (long dj = -6; dj <= 6; ++dj) {
        const long i = ci + di;
        const long j = cj + dj;
        if (i < samples.lo(0) || i > samples.hi(0) || j < samples.lo(1) ||
            j > samples.hi(1)) {
          continue;
        }
        const double d = std::hypot(i - si, j - sj);
        if (d > 3.0 && d <= 4.5) {
          ring_sum += samples.values(i - samples.lo(0), j - samples.lo(1));
          ++ring_count;
        }
      }
    }
    if (ring_count > 0) {
      const double ring_mean = ring_sum / ring_count;
      for (long di = -4; di <= 4; ++di) {
        for (long dj = -4; dj <= 4; ++dj) {
          const long i = ci + di;
          const long j = cj + dj;
          if (i < samples.lo(0) || i > samples.hi(0) || j < samples.lo(1) ||
              j > samples.hi(1)) {
            continue;
          }
          if (std::hypot(i - si, j - sj) <= 3.0) {
            samples.values(i - samples.lo(0), j - samples.lo(1)) = ring_mean;
          }
        }
      }
    }
  }

  return approx_to_grid(std::move(samples), k, grid, f);
}

Mat field_coeffs(const std::function<double(double, double)>& field, const WaveletGrid& grid,
                 int lattice_depth, const ScalingFilter& f) {
  const int k = grid.level + lattice_depth;
  if (k < 0) {
    throw std::invalid_argument("sampling lattice is coarser than the target scale");
  }
  std::array<std::array<long, 2>, 2> range;
  for (int axis = 0; axis < 2; ++axis) {
    range[axis] = needed_input_range(grid.lo[axis], grid.lo[axis] + grid.count[axis] - 1, k,
                                     f.taps());
  }
  const double h = std::ldexp(1.0, -lattice_depth);
  LatticeWindow samples;
  samples.offset = {range[0][0], range[1][0]};
  const long rows = range[0][1] - range[0][0] + 1;
  const long cols = range[1][1] - range[1][0] + 1;
  samples.values.resize(rows, cols);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < rows; ++i) {
    const double x0 = (range[0][0] + i) * h;
    for (long j = 0; j < cols; ++j) {
      samples.values(i, j) = h * field(x0, (range[1][0] + j) * h);
    }
  }
  return approx_to_grid(std::move(samples), k, grid, f);
}

Vec flatten_row_major(const Mat& m) {
  Vec v(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      v[i * m.cols() + j] = m(i, j);
    }
  }
  return v;
}

double eval_phi2d(const ScalingTable& table, int level, const std::array<long, 2>& n,
                  const Vec2& x) {
  const double scale = std::ldexp(1.0, -level);
  const double u0 = x(0) * scale - static_cast<double>(n[0]);
  const double u1 = x(1) * scale - static_cast<double>(n[1]);
  return scale * table.phi_at(u0) * table.phi_at(u1);
}

Vec2 grad_phi2d(const ScalingTable& table, int level, const std::array<long, 2>& n,
                const Vec2& x) {
  const double scale = std::ldexp(1.0, -level);
  const double u0 = x(0) * scale - static_cast<double>(n[0]);
  const double u1 = x(1) * scale - static_cast<double>(n[1]);
  return scale * scale *
         Vec2(table.dphi_at(u0) * table.phi_at(u1), table.phi_at(u0) * table.dphi_at(u1));
}

}  // namespace esense
