// Feature-matrix estimation from multistatic data: masked weighted-l1
// minimization (monotone FISTA) for the wavelet basis and truncated
// least squares for the polynomial basis.
#pragma once

#include <vector>

#include "esense/features.hpp"
#include "esense/sensing.hpp"
#include "esense/types.hpp"

namespace esense {

struct SolverOptions {
  int max_iterations = 2000;
  double tolerance = 1e-6;    // relative objective change at an accepted step
  int power_iterations = 50;  // for the Lipschitz estimate
};

// sign(x) * max(|x| - t, 0).
double soft_threshold(double x, double t);

// Noise-calibrated regularization weight
//   mu = scale * sigma * sqrt(Ns Nr) * sqrt(2 * log ||M||_1),
// with the log floored at 1 to keep single-entry masks regularized.
double universal_mu(double sigma, int num_sources, int num_receivers, const BandMask& mask,
                    double scale = 1.0);

// Norms of the masked-operator columns, one per mask pair in pairs() order:
// the column at entry (m, n) is the outer product of gx row m and gy row n.
Vec entry_weights(const ForwardOperator& op, const BandMask& mask);

// min over X supported on the mask of
//   1/2 ||L(X) - V||_F^2 + mu * sum_e w_e |X_e|.
struct L1Problem {
  const ForwardOperator* op = nullptr;
  const Mat* data = nullptr;
  const BandMask* mask = nullptr;
  Vec weights;  // pairs() order
  double mu = 0.0;
  SolverOptions options;
};

L1Problem make_l1_problem(const ForwardOperator& op, const MsrMatrix& v, const BandMask& mask,
                          double mu, SolverOptions options = {});

struct ReconResult {
  SpMat estimate;                      // support inside the mask
  std::vector<double> objective_trace;  // accepted values, non-increasing
  double residual = 0.0;               // final ||L(X) - V||_F
  long nonzeros = 0;
  int iterations = 0;
};

ReconResult fista_l1(const L1Problem& problem);

// Worst first-order stationarity violation of the estimate, normalized by
// the entry weight: comparable directly against mu (zero at an exact
// minimizer).
double kkt_residual(const L1Problem& problem, const SpMat& estimate);

struct PolynomialEstimate {
  PolynomialFeatureMatrix estimate;
  Eigen::Index rank_x = 0;  // effective ranks of the factor pseudo-inverses
  Eigen::Index rank_y = 0;
  double residual = 0.0;  // ||L(X) - V||_F
};

// Least-squares estimate of the polynomial feature matrix through the
// truncated-SVD pseudo-inverses of the operator factors (relative cutoff
// 1e-10). Requires more sources than twice the order.
PolynomialEstimate least_squares_gpt(const ForwardOperator& op, const MsrMatrix& v, int order);

}  // namespace esense
