#include "esense/recon.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace esense {

namespace {

// Forward and adjoint of the operator restricted to the masked entries,
// acting on the vector of masked values in pairs() order. The scatter
// pattern is a row-major sparse matrix whose storage order coincides with
// pairs() order, so values map straight into it.
struct MaskedOperator {
  const ForwardOperator* op;
  std::vector<std::pair<int, int>> entries;
  SpMat pattern;
  Mat gyt;  // gy transposed; column n is the receiver profile of atom n

  MaskedOperator(const ForwardOperator& fwd, const BandMask& mask) : op(&fwd) {
    entries = mask.pairs();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(entries.size());
    for (const auto& e : entries) trips.emplace_back(e.first, e.second, 1.0);
    pattern.resize(mask.grid.size(), mask.grid.size());
    pattern.setFromTriplets(trips.begin(), trips.end());
    pattern.makeCompressed();
    if (pattern.nonZeros() != static_cast<Eigen::Index>(entries.size()))
      throw std::logic_error("mask pairs are not unique");
    gyt = fwd.gy.transpose();
  }

  long size() const { return static_cast<long>(entries.size()); }

  Mat forward(const Vec& z) {
    Eigen::Map<Vec>(pattern.valuePtr(), pattern.nonZeros()) = z;
    const Mat u = pattern * op->gy;
    return op->gx.transpose() * u;
  }

  Vec adjoint(const Mat& r) const {
    const Mat tt = r.transpose() * op->gx.transpose();  // receivers x atoms
    Vec out(size());
    for (long e = 0; e < size(); ++e) {
      out(e) = tt.col(entries[e].first).dot(gyt.col(entries[e].second));
    }
    return out;
  }

  // Largest squared singular value by power iteration, deterministic start.
  double squared_norm(int iterations) {
    Vec z = Vec::Ones(size()) + Vec::LinSpaced(size(), 0.0, 1.0);
    z.normalize();
    double s = 0.0;
    for (int it = 0; it < iterations; ++it) {
      const Vec w = adjoint(forward(z));
      s = w.norm();
      if (s == 0.0) return 0.0;
      z = w / s;
    }
    return s;
  }
};

Vec gather(const MaskedOperator& masked, const SpMat& x) {
  if (x.rows() != masked.pattern.rows() || x.cols() != masked.pattern.cols())
    throw std::invalid_argument("estimate dimensions do not match the mask grid");
  Vec z = Vec::Zero(masked.size());
  long cursor = 0;
  for (int row = 0; row < x.outerSize(); ++row) {
    for (SpMat::InnerIterator it(x, row); it; ++it) {
      while (cursor < masked.size() &&
             (masked.entries[cursor].first < it.row() ||
              (masked.entries[cursor].first == it.row() &&
               masked.entries[cursor].second < it.col())))
        ++cursor;
      if (cursor == masked.size() || masked.entries[cursor].first != it.row() ||
          masked.entries[cursor].second != it.col())
        throw std::invalid_argument("estimate has support outside the mask");
      z(cursor) = it.value();
    }
  }
  return z;
}

SpMat scatter_nonzeros(const MaskedOperator& masked, const Vec& z) {
  std::vector<Eigen::Triplet<double>> trips;
  for (long e = 0; e < masked.size(); ++e) {
    if (z(e) != 0.0) trips.emplace_back(masked.entries[e].first, masked.entries[e].second, z(e));
  }
  SpMat out(masked.pattern.rows(), masked.pattern.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

void check_problem(const L1Problem& p) {
  if (p.op == nullptr || p.data == nullptr || p.mask == nullptr)
    throw std::invalid_argument("reconstruction problem is incomplete");
  if (!p.data->allFinite()) throw std::invalid_argument("data contains non-finite values");
  if (p.mu < 0.0) throw std::invalid_argument("regularization weight must be non-negative");
  if (p.op->gx.rows() != p.mask->grid.size())
    throw std::invalid_argument("mask grid does not match the operator basis");
  if (p.data->rows() != p.op->gx.cols() || p.data->cols() != p.op->gy.cols())
    throw std::invalid_argument("data dimensions do not match the measurement system");
}

// Truncated-SVD pseudo-inverse with a relative cutoff; reports the kept rank.
Mat pseudo_inverse(const Mat& m, double cutoff, Eigen::Index* rank) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  Vec inv = Vec::Zero(s.size());
  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff * s(0)) {
      inv(i) = 1.0 / s(i);
      ++kept;
    }
  }
  if (rank != nullptr) *rank = kept;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

double universal_mu(double sigma, int num_sources, int num_receivers, const BandMask& mask,
                    double scale) {
  if (sigma < 0.0) throw std::invalid_argument("noise level must be non-negative");
  if (num_sources < 1 || num_receivers < 1)
    throw std::invalid_argument("measurement counts must be positive");
  const long m1 = mask.allowed_count();
  if (m1 == 0) throw std::invalid_argument("mask allows no entries");
  const double logterm = std::max(std::log(static_cast<double>(m1)), 1.0);
  return scale * sigma * std::sqrt(static_cast<double>(num_sources) * num_receivers) *
         std::sqrt(2.0 * logterm);
}

Vec entry_weights(const ForwardOperator& op, const BandMask& mask) {
  if (op.gx.rows() != mask.grid.size() || op.gy.rows() != mask.grid.size())
    throw std::invalid_argument("mask grid does not match the operator basis");
  const Vec row_x = op.gx.rowwise().norm();
  const Vec row_y = op.gy.rowwise().norm();
  const auto pairs = mask.pairs();
  Vec w(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    w(static_cast<Eigen::Index>(e)) = row_x(pairs[e].first) * row_y(pairs[e].second);
  }
  return w;
}

L1Problem make_l1_problem(const ForwardOperator& op, const MsrMatrix& v, const BandMask& mask,
                          double mu, SolverOptions options) {
  L1Problem p;
  p.op = &op;
  p.data = &v.entries;
  p.mask = &mask;
  p.mu = mu;
  p.options = options;
  check_problem(p);
  p.weights = entry_weights(op, mask);
  if ((p.weights.array() <= 0.0).any())
    throw std::invalid_argument("masked operator has a zero column; weights are not positive");
  return p;
}

ReconResult fista_l1(const L1Problem& problem) {
  check_problem(problem);
  MaskedOperator masked(*problem.op, *problem.mask);
  if (problem.weights.size() != masked.size())
    throw std::invalid_argument("weight vector does not match the mask");
  const Mat& v = *problem.data;
  const Vec& w = problem.weights;
  const double mu = problem.mu;

  const double lip = masked.squared_norm(problem.options.power_iterations);
  if (!(lip > 0.0) || !std::isfinite(lip))
    throw std::runtime_error("Lipschitz estimate failed for the masked operator");
  const double step = 1.0 / lip;

  const auto objective = [&](const Vec& z, const Mat& residual) {
    return 0.5 * residual.squaredNorm() + mu * (w.array() * z.array().abs()).sum();
  };

  Vec x = Vec::Zero(masked.size());
  Vec y = x;
  double t = 1.0;
  Mat residual = -v;  // forward(0) - V
  double fx = objective(x, residual);

  ReconResult result;
  result.objective_trace.push_back(fx);

  int used = 0;
  for (int k = 0; k < problem.options.max_iterations; ++k) {
    ++used;
    const Mat ry = masked.forward(y) - v;
    const Vec grad = masked.adjoint(ry);
    Vec cand = y - step * grad;
    for (long e = 0; e < masked.size(); ++e) {
      cand(e) = soft_threshold(cand(e), step * mu * w(e));
    }
    Mat rc = masked.forward(cand) - v;
    const double fc = objective(cand, rc);

    bool accepted = fc <= fx;
    if (accepted) {
      const double drop = fx - fc;
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = cand + ((t - 1.0) / tn) * (cand - x);
      x = cand;
      fx = fc;
      t = tn;
      residual.swap(rc);
      result.objective_trace.push_back(fx);
      if (drop <= problem.options.tolerance * std::max(fx, 1e-300)) break;
    } else {
      // Monotone safeguard: keep the incumbent and restart the momentum.
      y = x;
      t = 1.0;
      result.objective_trace.push_back(fx);
    }
  }

  result.iterations = used;
  result.estimate = scatter_nonzeros(masked, x);
  result.nonzeros = static_cast<long>(result.estimate.nonZeros());
  result.residual = residual.norm();
  return result;
}

double kkt_residual(const L1Problem& problem, const SpMat& estimate) {
  check_problem(problem);
  MaskedOperator masked(*problem.op, *problem.mask);
  if (problem.weights.size() != masked.size())
    throw std::invalid_argument("weight vector does not match the mask");
  const Vec z = gather(masked, estimate);
  const Vec grad = masked.adjoint(masked.forward(z) - *problem.data);
  double worst = 0.0;
  for (long e = 0; e < masked.size(); ++e) {
    const double bound = problem.mu * problem.weights(e);
    const double viol = z(e) == 0.0 ? std::max(std::abs(grad(e)) - bound, 0.0)
                                    : std::abs(grad(e) + bound * (z(e) > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, viol / problem.weights(e));
  }
  return worst;
}

PolynomialEstimate least_squares_gpt(const ForwardOperator& op, const MsrMatrix& v, int order) {
  if (op.kind != BasisKind::Polynomial || op.scale_or_order != order)
    throw std::invalid_argument("operator was not built for this polynomial order");
  if (op.gx.cols() <= 2 * order)
    throw std::invalid_argument("least-squares estimation needs more than twice the order in sources");
  if (v.entries.rows() != op.gx.cols() || v.entries.cols() != op.gy.cols())
    throw std::invalid_argument("data dimensions do not match the measurement system");
  if (!v.entries.allFinite()) throw std::invalid_argument("data contains non-finite values");

  constexpr double kCutoff = 1e-10;
  PolynomialEstimate out;
  out.estimate.order = order;
  out.estimate.exponents = polynomial_exponents(order);
  const Mat px = pseudo_inverse(op.gx.transpose(), kCutoff, &out.rank_x);
  const Mat py = pseudo_inverse(op.gy, kCutoff, &out.rank_y);
  out.estimate.entries = px * v.entries * py;
  out.residual = (op.gx.transpose() * out.estimate.entries * op.gy - v.entries).norm();
  return out;
}

}  // namespace esense
