#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "meiscv/densities.hpp"
#include "meiscv/estimators.hpp"
#include "meiscv/rng.hpp"

namespace meiscv {

// Maximum vertical tip displacement of the rectangular cantilever beam under
// the two tip forces. Inputs: (F_X, F_Y, E, l_X, l_Y, L).
double cantilever_phi(const Eigen::VectorXd& inputs);

// (2j-1)!! -- the 2j-th moment of the standard normal distribution.
double double_factorial_odd(int j);

struct MomentsProblem {
  EstimationProblem problem;
  Eigen::VectorXd reference;  // I_j = (2j-1)!!
};

// Even-moment estimation of the 1-D standard normal: targets x^{2j} for
// j = 1..J under the shared N(0,1) input. Weights default to I_j^{-2}.
MomentsProblem moments_problem(int target_count, bool unit_weights = false);

// Pick-Freeze target family over the augmented space of (x, x') pairs:
// targets i < d are phi(x) * phi(x_i, x'_{-i}), then phi(x) and phi(x)^2.
// Base-model evaluations are cached per augmented point by the exact input
// vector bits, so one point costs at most d+1 calls across all targets.
class PickFreezeTargets final : public TargetFamily {
 public:
  PickFreezeTargets(int base_dim, TargetFn phi);

  int dim() const override { return 2 * base_dim_; }
  int base_dim() const { return base_dim_; }
  int target_count() const override { return base_dim_ + 2; }
  std::shared_ptr<TargetFamily> fresh_clone() const override;

 protected:
  Eigen::MatrixXd evaluate_impl(const Eigen::MatrixXd& points) const override;
  Eigen::VectorXd evaluate_one_impl(int target, const Eigen::MatrixXd& points) const override;

 private:
  int base_dim_;
  TargetFn phi_;
};

struct SobolProblem {
  // J = d+2 targets over the 2d-dimensional augmented space, posed in
  // standardized coordinates (the input density is a product of standard
  // normals; the targets wrap the coordinatewise transport back to the
  // physical inputs).
  EstimationProblem problem;
  int base_dim = 0;
  DensityPtr base_density;  // physical input density
};

// First-order Sobol' estimation as a multiple-expectation problem in the
// augmented space. Refuses dependent inputs.
SobolProblem build_sobol_problem(TargetFn phi, DensityPtr base_density);

struct SobolIndices {
  Eigen::VectorXd values;      // d first-order indices
  std::vector<bool> clamped;   // true where the raw value left [-0.1, 1.1]
};

// S_i = (E_i - E_{d+1}^2) / (E_{d+2} - E_{d+1}^2) from the d+2 estimated
// expectations, clamped to [-0.1, 1.1] with a flag.
SobolIndices sobol_from_expectations(const Eigen::VectorXd& expectations);

// Joint input density of the cantilever inputs for a parameter vector
// m = (means m_1..m_6, correlations m_7..m_9). Throws NumericalError when
// the correlation triple is not positive-definite.
DensityPtr cantilever_input_density(const Eigen::VectorXd& m);

// Parameter vector of the independent-inputs Sobol' study.
Eigen::VectorXd sobol_reference_parameters();

// Uniform boxes of the nine uncertain distribution parameters.
std::vector<std::pair<double, double>> parameter_bounds();

struct ParamSensitivityProblem {
  EstimationProblem problem;         // shared cantilever model, J joint densities
  Eigen::MatrixXd parameter_sample;  // J x 9
  std::int64_t redraws = 0;          // LHS rows rejected for a non-PD correlation triple
};

// J parameter vectors by Latin hypercube over the parameter boxes, one joint
// input density per vector, unit weights. Non-positive-definite correlation
// triples are rejected and that row redrawn.
ParamSensitivityProblem build_param_sensitivity_problem(int target_count, RngStream& rng);

}  // namespace meiscv
