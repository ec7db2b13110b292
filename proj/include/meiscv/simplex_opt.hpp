#pragma once

#include <Eigen/Dense>
#include <vector>

namespace meiscv {

// Mixture weights are kept at or above this floor so every component's
// variance bound stays finite and no likelihood ratio divides by zero.
inline constexpr double kAlphaFloor = 1e-6;

// Stochastic-counterpart objective for the mixture weights: with
// numerator_n = sum_j w_j (phi_j f_j - beta_j g_{lambda_j})^2 (x_n),
// the objective at alpha is sum_n numerator_n / (g_alpha(x_n) h(x_n)).
// The data is immutable; evaluation is thread-compatible.
struct AlphaObjective {
  Eigen::VectorXd numerators;      // n, >= 0
  Eigen::MatrixXd component_pdfs;  // n x J, g_{lambda_j}(x_n)
  Eigen::VectorXd history_pdf;     // n, h_{k-1}(x_n) > 0

  AlphaObjective(Eigen::VectorXd numerators_in, Eigen::MatrixXd component_pdfs_in,
                 Eigen::VectorXd history_pdf_in);

  int target_count() const { return static_cast<int>(component_pdfs.cols()); }
  std::int64_t size() const { return numerators.size(); }

 private:
  friend double objective_value(const AlphaObjective&, const Eigen::VectorXd&);
  friend Eigen::VectorXd objective_gradient(const AlphaObjective&, const Eigen::VectorXd&);
  Eigen::VectorXd scaled_;  // numerators / history_pdf, cached
};

// Objective at a feasible alpha; +inf when some mixture pdf vanishes under a
// positive numerator. Throws on alpha outside the floored simplex.
double objective_value(const AlphaObjective& objective, const Eigen::VectorXd& alpha);

// Analytic gradient: d/d alpha_j = -sum_n scaled_n component_{n,j} / g_alpha(x_n)^2.
Eigen::VectorXd objective_gradient(const AlphaObjective& objective, const Eigen::VectorXd& alpha);

// Euclidean projection onto { alpha : alpha_j >= floor, sum alpha_j = 1 }.
Eigen::VectorXd project_to_floored_simplex(const Eigen::VectorXd& v, double floor = kAlphaFloor);

bool in_floored_simplex(const Eigen::VectorXd& alpha, double floor = kAlphaFloor);

struct MinimizeOptions {
  int max_iterations = 500;
  double kkt_tolerance = 1e-6;  // relative first-order residual
};

// Projected gradient descent with Armijo backtracking on the floored
// simplex. The objective is convex, so the first-order point it returns is
// the constrained minimum up to the tolerance. Monotone: the objective never
// increases across iterations. objective_trace, when given, receives the
// objective value at the start and after every accepted step.
Eigen::VectorXd minimize_alpha(const AlphaObjective& objective,
                               const Eigen::VectorXd& alpha_start,
                               const MinimizeOptions& options = {},
                               std::vector<double>* objective_trace = nullptr);

}  // namespace meiscv
