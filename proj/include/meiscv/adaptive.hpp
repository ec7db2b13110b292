#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "meiscv/ce_update.hpp"
#include "meiscv/densities.hpp"
#include "meiscv/estimators.hpp"
#include "meiscv/rng.hpp"
#include "meiscv/simplex_opt.hpp"

namespace meiscv {

// Total model-call budget and the per-iteration sample sizes (stationary).
struct BudgetSchedule {
  std::int64_t n_max = 0;
  std::int64_t n_initial = 0;
  std::int64_t n_step = 0;

  // Valid schedules admit at least one adaptation loop pass and leave at
  // least half the budget for the final independent sample.
  void validate() const;
};

enum class InitialMixture { kUniform, kWeighted };
enum class AuxiliaryFamily { kGaussian, kGaussianMixture };
enum class StopReason { kCriterion, kBudget };

struct AdaptiveOptions {
  InitialMixture h0_mode = InitialMixture::kUniform;
  AuxiliaryFamily family = AuxiliaryFamily::kGaussian;
  int mixture_components = 2;  // per-target components when family is the mixture one
};

struct LambdaSummary {
  Eigen::VectorXd mean;
  double cov_trace = 0.0;
};

struct IterationRecord {
  int k = 0;
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  std::vector<LambdaSummary> lambda;
  double criterion = 0.0;             // sum_j w_j Var over this iteration's sample
  double criterion_per_budget = 0.0;  // criterion / remaining final-sample budget
};

struct RunReport {
  std::vector<CvEstimate> estimates;
  int iterations = 0;
  StopReason stop_reason = StopReason::kCriterion;
  std::vector<IterationRecord> trace;
  std::uint64_t model_calls = 0;
  std::int64_t final_sample_size = 0;
};

// The budget-aware stop test: stopping after the previous iteration would
// have yielded a criterion-per-final-point no worse than stopping now.
bool stop_inequality(double prev_criterion, std::int64_t prev_remaining,
                     double curr_criterion, std::int64_t curr_remaining);

// Final-stage estimates for frozen parameters: one fresh g_alpha sample, one
// cv_estimate per target with its control density and control parameter.
std::vector<CvEstimate> cv_estimates_on_sample(const EstimationProblem& problem,
                                               const Density& sampling_density,
                                               const std::vector<DensityPtr>& controls,
                                               const Eigen::VectorXd& betas,
                                               std::int64_t n, RngStream& rng);

// One adaptive run: initialization, the adaptation loop with the
// cross-entropy / mixture-weight / control-parameter updates and the
// stopping criterion, then unbiased estimation on a fresh independent
// sample. Single-owner sequential state machine; run independent
// replications with disjoint seed streams.
class AdaptiveRun {
 public:
  AdaptiveRun(const EstimationProblem& problem, BudgetSchedule schedule,
              AdaptiveOptions options, RngStream root);

  // Draws the initial sample from h_0, computes the first IS estimates and
  // seeds alpha and beta from them.
  void initialize();

  bool loop_admissible() const;  // n_eval < n_max / 2

  // One adaptation pass: lambda updates on the full history, mixture-weight
  // optimization warm-started at the previous optimum, a fresh sample from
  // the new mixture, and control parameters from that sample only.
  void iterate();

  // Budget-aware comparison of the last two iterations; true means stop.
  bool stopping_check();

  // Spends the remaining budget on a fresh independent sample and returns
  // the per-target estimates with the final parameters.
  RunReport finalize();

  // Whole algorithm end to end.
  static RunReport run(const EstimationProblem& problem, const BudgetSchedule& schedule,
                       const AdaptiveOptions& options, std::uint64_t seed);

  // Observers (primarily for tests and the trace).
  int iteration() const { return k_; }
  std::int64_t n_eval() const { return n_eval_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const Eigen::VectorXd& beta() const { return beta_; }
  const Eigen::VectorXd& initial_estimates() const { return initial_estimates_; }
  const std::vector<DensityPtr>& lambdas() const { return lambdas_; }
  DensityPtr history_mixture() const;
  DensityPtr current_mixture() const { return g_alpha_; }
  const std::vector<IterationRecord>& trace() const { return trace_; }
  StopReason stop_reason() const { return stop_reason_; }

 private:
  struct Batch {
    Eigen::MatrixXd points;
    Eigen::MatrixXd phi;            // n x J
    Eigen::MatrixXd input_log_pdf;  // n x J
    // log pdf of every history component (h0, g_alpha^(1), ...) at the
    // points; components are immutable once created, only their history
    // weights change, so each column is computed exactly once.
    std::vector<Eigen::VectorXd> component_log_pdf;
  };

  void draw_batch(const Density& generator, std::int64_t n, RngStream& rng);
  Eigen::VectorXd history_weights() const;              // N_i / N_eval
  Eigen::VectorXd history_log_pdf(const Batch&) const;  // log h_k at batch points
  WeightedSample concatenated_history() const;

  const EstimationProblem& problem_;
  BudgetSchedule schedule_;
  AdaptiveOptions options_;
  RngStream root_;
  std::uint64_t calls_at_start_ = 0;

  int k_ = -1;  // -1 before initialize()
  std::int64_t n_eval_ = 0;
  std::vector<Batch> batches_;
  std::vector<DensityPtr> history_components_;
  std::vector<std::int64_t> history_sizes_;

  std::vector<DensityPtr> lambdas_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd beta_;
  Eigen::VectorXd initial_estimates_;
  std::shared_ptr<const MixtureDensity> g_alpha_;

  double prev_criterion_ = 0.0;
  std::int64_t prev_remaining_ = 0;
  double curr_criterion_ = 0.0;
  std::int64_t curr_remaining_ = 0;

  StopReason stop_reason_ = StopReason::kBudget;
  std::vector<IterationRecord> trace_;
};

}  // namespace meiscv
