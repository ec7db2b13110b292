#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "meiscv/densities.hpp"

namespace meiscv {

// Point estimate together with the unbiased sample variance of the per-point
// integrand it averaged. The variance of the estimator itself is
// integrand_variance / n.
struct CvEstimate {
  double value = 0.0;
  double integrand_variance = 0.0;
  std::int64_t n = 0;
};

// Importance-sampling estimate of E_f[phi] from a sample drawn under g:
// mean of phi * f / g. All vectors are aligned with the sample points.
CvEstimate is_estimate(const Eigen::VectorXd& phi_values, const Eigen::VectorXd& f_pdf,
                       const Eigen::VectorXd& g_pdf);

// IS estimate with one control function whose integral is 1 (the control is
// itself a probability density): mean of (phi * f - beta * control) / g + beta.
CvEstimate cv_estimate(const Eigen::VectorXd& phi_values, const Eigen::VectorXd& f_pdf,
                       const Eigen::VectorXd& control_pdf, const Eigen::VectorXd& g_pdf,
                       double beta);

// Regression estimate of the variance-optimal control parameter:
// sample-cov(phi f / g, control / g) / sample-var(control / g), both with the
// unbiased (n - 1) normalization.
double beta_hat(const Eigen::VectorXd& phi_values, const Eigen::VectorXd& f_pdf,
                const Eigen::VectorXd& control_pdf, const Eigen::VectorXd& g_pdf);

// sum_j w_j * integrand_variance_j / n_final.
double weighted_criterion(const std::vector<CvEstimate>& estimates,
                          const Eigen::VectorXd& weights, std::int64_t n_final);

// A family of J non-negative target functions sharing one input domain.
// Implementations own the model-call accounting: the counter reflects the
// exact number of underlying model evaluations consumed so far. The counter
// uses atomic increments so parallel batches report exact totals.
class TargetFamily {
 public:
  virtual ~TargetFamily() = default;

  virtual int dim() const = 0;
  virtual int target_count() const = 0;

  // Values of every target at each point (rows); n x J.
  Eigen::MatrixXd evaluate(const Eigen::MatrixXd& points) const;

  // Values of a single target, with single-target call accounting.
  Eigen::VectorXd evaluate_one(int target, const Eigen::MatrixXd& points) const;

  // A copy sharing the target definitions but with a zeroed call counter.
  virtual std::shared_ptr<TargetFamily> fresh_clone() const = 0;

  std::uint64_t model_calls() const { return calls_.load(std::memory_order_relaxed); }

 protected:
  virtual Eigen::MatrixXd evaluate_impl(const Eigen::MatrixXd& points) const = 0;
  virtual Eigen::VectorXd evaluate_one_impl(int target, const Eigen::MatrixXd& points) const = 0;

  void add_model_calls(std::uint64_t n) const {
    calls_.fetch_add(n, std::memory_order_relaxed);
  }

 private:
  mutable std::atomic<std::uint64_t> calls_{0};
};

using TargetFn = std::function<double(const Eigen::VectorXd&)>;

// J closed-form functions evaluated pointwise. When the functions are all
// cheap views of one shared model output (e.g. powers of the same scalar), a
// batch of n points costs n model calls; otherwise n * J.
class PointwiseTargets final : public TargetFamily {
 public:
  PointwiseTargets(int dim, std::vector<TargetFn> functions, bool shared_model);

  int dim() const override { return dim_; }
  int target_count() const override { return static_cast<int>(functions_.size()); }
  std::shared_ptr<TargetFamily> fresh_clone() const override;

 protected:
  Eigen::MatrixXd evaluate_impl(const Eigen::MatrixXd& points) const override;
  Eigen::VectorXd evaluate_one_impl(int target, const Eigen::MatrixXd& points) const override;

 private:
  int dim_;
  std::vector<TargetFn> functions_;
  bool shared_model_;
};

// One function estimated under J different input distributions (Case 2): a
// batch of n points costs n model calls regardless of J.
class SharedFunctionTargets final : public TargetFamily {
 public:
  SharedFunctionTargets(int dim, int target_count, TargetFn phi);

  int dim() const override { return dim_; }
  int target_count() const override { return target_count_; }
  std::shared_ptr<TargetFamily> fresh_clone() const override;

 protected:
  Eigen::MatrixXd evaluate_impl(const Eigen::MatrixXd& points) const override;
  Eigen::VectorXd evaluate_one_impl(int target, const Eigen::MatrixXd& points) const override;

 private:
  int dim_;
  int target_count_;
  TargetFn phi_;
};

// J estimation targets (phi_j, f_j, w_j) sharing one input domain.
class EstimationProblem {
 public:
  EstimationProblem(std::shared_ptr<const TargetFamily> targets,
                    std::vector<DensityPtr> input_densities, Eigen::VectorXd weights);

  int dim() const { return targets_->dim(); }
  int target_count() const { return targets_->target_count(); }

  const TargetFamily& targets() const { return *targets_; }
  std::shared_ptr<const TargetFamily> targets_ptr() const { return targets_; }
  const Density& input_density(int j) const;
  DensityPtr input_density_ptr(int j) const;
  const Eigen::VectorXd& weights() const { return weights_; }

  // Case 1: every target shares the same input density object.
  bool single_input_density() const { return single_input_; }

  // log f_j at each point; n x J (deduplicated in Case 1).
  Eigen::MatrixXd input_log_pdfs(const Eigen::MatrixXd& points) const;

  std::uint64_t model_calls() const { return targets_->model_calls(); }

  // Same problem backed by a fresh target-family counter (for independent
  // replications with exact per-replication budget audits).
  EstimationProblem with_fresh_counter() const;

 private:
  std::shared_ptr<const TargetFamily> targets_;
  std::vector<DensityPtr> input_densities_;
  Eigen::VectorXd weights_;
  bool single_input_ = false;
};

// Per-target crude Monte Carlo with floor(n_total / J) points each.
std::vector<CvEstimate> naive_mc_baseline(const EstimationProblem& problem,
                                          std::int64_t n_total, RngStream& rng);

// One shared sample from the uniform mixture of the f_j, reweighted into the
// J importance-sampling estimates.
std::vector<CvEstimate> mc_mixture_baseline(const EstimationProblem& problem,
                                            std::int64_t n_total, RngStream& rng);

}  // namespace meiscv
