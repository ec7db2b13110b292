#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "meiscv/densities.hpp"

namespace meiscv {

// Concatenated history sample with the cross-entropy weights
// phi_j * f_j / h_{k-1} per point and target. Points whose history density
// underflowed are dropped at construction and counted.
struct WeightedSample {
  Eigen::MatrixXd points;          // n x d, retained points only
  Eigen::VectorXd history_pdf;     // h_{k-1} at the points, > 0
  Eigen::MatrixXd target_weights;  // n x J, phi_j f_j / h_{k-1}, finite and >= 0
  std::int64_t dropped_points = 0;

  static WeightedSample build(const Eigen::MatrixXd& points,
                              const Eigen::VectorXd& history_log_pdf,
                              const Eigen::MatrixXd& phi_values,
                              const Eigen::MatrixXd& input_log_pdfs);

  int dim() const { return static_cast<int>(points.cols()); }
  std::int64_t size() const { return points.rows(); }
};

// Closed-form cross-entropy update in the Gaussian family: weighted mean and
// weighted covariance of the sample under the CE weights of the target.
// Weights above 1e6 times the median positive weight are capped before the
// fit to bound early-iteration weight degeneracy.
GaussianDensity gaussian_ce_update(const WeightedSample& sample, int target_index);

// Cross-entropy update in the K-component Gaussian-mixture family via
// weighted EM. K = 1 reduces exactly to gaussian_ce_update. Components whose
// weight collapses or whose covariance turns singular are dropped and the
// remaining ones refit. When loglik_trace is given it receives the weighted
// log-likelihood after each EM iteration of the accepted fit.
MixtureDensity mixture_ce_update(const WeightedSample& sample, int target_index,
                                 int component_count,
                                 std::vector<double>* loglik_trace = nullptr);

// Weighted stochastic-counterpart objective sum_n u_n log g(x_n); the
// quantity each CE update maximizes over its family.
double weighted_log_likelihood(const Density& density, const Eigen::MatrixXd& points,
                               const Eigen::VectorXd& weights);

}  // namespace meiscv
