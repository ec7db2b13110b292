#include "meiscv/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "meiscv/errors.hpp"

namespace meiscv {

namespace {

Eigen::VectorXd pdf_from_log(const Eigen::VectorXd& log_pdf) {
  Eigen::VectorXd out(log_pdf.size());
  for (Eigen::Index i = 0; i < log_pdf.size(); ++i) {
    out[i] = log_pdf[i] >= kLogUnderflowFloor ? std::exp(log_pdf[i]) : 0.0;
  }
  return out;
}

LambdaSummary summarize_lambda(const Density& density) {
  LambdaSummary s;
  if (const auto* gauss = dynamic_cast<const GaussianDensity*>(&density)) {
    s.mean = gauss->mean();
    s.cov_trace = gauss->covariance().trace();
    return s;
  }
  if (const auto* mix = dynamic_cast<const MixtureDensity*>(&density)) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(mix->dim());
    for (int k = 0; k < mix->component_count(); ++k) {
      if (const auto* g = dynamic_cast<const GaussianDensity*>(&mix->component(k))) {
        mean += mix->weights()[k] * g->mean();
      }
    }
    double trace = 0.0;
    for (int k = 0; k < mix->component_count(); ++k) {
      if (const auto* g = dynamic_cast<const GaussianDensity*>(&mix->component(k))) {
        trace += mix->weights()[k] *
                 (g->covariance().trace() + (g->mean() - mean).squaredNorm());
      }
    }
    s.mean = mean;
    s.cov_trace = trace;
    return s;
  }
  s.mean = Eigen::VectorXd::Zero(density.dim());
  s.cov_trace = std::numeric_limits<double>::quiet_NaN();
  return s;
}

double unbiased_variance(const Eigen::VectorXd& values) {
  const Eigen::Index n = values.size();
  if (n < 2) return 0.0;
  const double mean = values.mean();
  return (values.array() - mean).square().sum() / static_cast<double>(n - 1);
}

}  // namespace

void BudgetSchedule::validate() const {
  if (n_max < 1 || n_initial < 1 || n_step < 1) {
    throw UsageError("BudgetSchedule: all sizes must be positive");
  }
  if (n_initial + n_step > n_max / 2) {
    throw UsageError("BudgetSchedule: n_initial + n_step must not exceed n_max / 2");
  }
}

bool stop_inequality(double prev_criterion, std::int64_t prev_remaining,
                     double curr_criterion, std::int64_t curr_remaining) {
  if (curr_remaining <= 0 || prev_remaining <= 0) return true;
  return prev_criterion / static_cast<double>(prev_remaining) <=
         curr_criterion / static_cast<double>(curr_remaining);
}

std::vector<CvEstimate> cv_estimates_on_sample(const EstimationProblem& problem,
                                               const Density& sampling_density,
                                               const std::vector<DensityPtr>& controls,
                                               const Eigen::VectorXd& betas,
                                               std::int64_t n, RngStream& rng) {
  const int j_count = problem.target_count();
  if (static_cast<int>(controls.size()) != j_count || betas.size() != j_count) {
    throw UsageError("cv_estimates_on_sample: control count does not match targets");
  }
  if (n < 2) throw NumericalError("cv_estimates_on_sample: degenerate final sample size");

  const Eigen::MatrixXd pts = sampling_density.sample(static_cast<int>(n), rng);
  const Eigen::MatrixXd phi = problem.targets().evaluate(pts);
  const Eigen::MatrixXd f_log = problem.input_log_pdfs(pts);
  const Eigen::VectorXd g_pdf = pdf_from_log(sampling_density.log_pdf_rows(pts));

  std::vector<CvEstimate> out;
  out.reserve(static_cast<std::size_t>(j_count));
  for (int j = 0; j < j_count; ++j) {
    const Eigen::VectorXd control_pdf =
        pdf_from_log(controls[static_cast<std::size_t>(j)]->log_pdf_rows(pts));
    out.push_back(
        cv_estimate(phi.col(j), pdf_from_log(f_log.col(j)), control_pdf, g_pdf, betas[j]));
  }
  return out;
}

AdaptiveRun::AdaptiveRun(const EstimationProblem& problem, BudgetSchedule schedule,
                         AdaptiveOptions options, RngStream root)
    : problem_(problem), schedule_(schedule), options_(options), root_(root) {
  schedule_.validate();
  calls_at_start_ = problem_.model_calls();
}

DensityPtr AdaptiveRun::history_mixture() const {
  if (history_components_.empty()) throw UsageError("AdaptiveRun: not initialized");
  if (history_components_.size() == 1) return history_components_.front();
  return std::make_shared<MixtureDensity>(history_components_, history_weights());
}

Eigen::VectorXd AdaptiveRun::history_weights() const {
  Eigen::VectorXd w(static_cast<Eigen::Index>(history_sizes_.size()));
  for (std::size_t i = 0; i < history_sizes_.size(); ++i) {
    w[static_cast<Eigen::Index>(i)] =
        static_cast<double>(history_sizes_[i]) / static_cast<double>(n_eval_);
  }
  return w;
}

Eigen::VectorXd AdaptiveRun::history_log_pdf(const Batch& batch) const {
  const Eigen::VectorXd w = history_weights();
  const Eigen::Index n = batch.points.rows();
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double max_term = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < w.size(); ++c) {
      if (w[c] <= 0.0) continue;
      max_term = std::max(max_term,
                          std::log(w[c]) + batch.component_log_pdf[static_cast<std::size_t>(c)][i]);
    }
    double acc = 0.0;
    for (Eigen::Index c = 0; c < w.size(); ++c) {
      if (w[c] <= 0.0) continue;
      acc += std::exp(std::log(w[c]) +
                      batch.component_log_pdf[static_cast<std::size_t>(c)][i] - max_term);
    }
    out[i] = max_term + std::log(acc);
  }
  return out;
}

void AdaptiveRun::draw_batch(const Density& generator, std::int64_t n, RngStream& rng) {
  Batch batch;
  batch.points = generator.sample(static_cast<int>(n), rng);
  batch.phi = problem_.targets().evaluate(batch.points);
  batch.input_log_pdf = problem_.input_log_pdfs(batch.points);
  batch.component_log_pdf.reserve(history_components_.size());
  for (const auto& comp : history_components_) {
    batch.component_log_pdf.push_back(comp->log_pdf_rows(batch.points));
  }
  batches_.push_back(std::move(batch));
}

WeightedSample AdaptiveRun::concatenated_history() const {
  std::int64_t total = 0;
  for (const auto& b : batches_) total += b.points.rows();
  const int d = problem_.dim();
  const int j_count = problem_.target_count();

  Eigen::MatrixXd points(total, d);
  Eigen::MatrixXd phi(total, j_count);
  Eigen::MatrixXd f_log(total, j_count);
  Eigen::VectorXd h_log(total);
  Eigen::Index row = 0;
  for (const auto& b : batches_) {
    const Eigen::Index n = b.points.rows();
    points.middleRows(row, n) = b.points;
    phi.middleRows(row, n) = b.phi;
    f_log.middleRows(row, n) = b.input_log_pdf;
    h_log.segment(row, n) = history_log_pdf(b);
    row += n;
  }
  return WeightedSample::build(points, h_log, phi, f_log);
}

void AdaptiveRun::initialize() {
  if (k_ >= 0) throw UsageError("AdaptiveRun: already initialized");
  const int j_count = problem_.target_count();

  DensityPtr h0;
  if (problem_.single_input_density()) {
    h0 = problem_.input_density_ptr(0);  // Case 1: the shared f itself
  } else {
    std::vector<DensityPtr> comps;
    comps.reserve(static_cast<std::size_t>(j_count));
    for (int j = 0; j < j_count; ++j) comps.push_back(problem_.input_density_ptr(j));
    Eigen::VectorXd w;
    if (options_.h0_mode == InitialMixture::kUniform) {
      w = Eigen::VectorXd::Constant(j_count, 1.0 / j_count);
    } else {
      w = problem_.weights() / problem_.weights().sum();
    }
    h0 = std::make_shared<MixtureDensity>(std::move(comps), std::move(w));
  }

  history_components_.push_back(h0);
  RngStream init_rng = root_.fork("init");
  draw_batch(*h0, schedule_.n_initial, init_rng);
  history_sizes_.push_back(schedule_.n_initial);
  n_eval_ = schedule_.n_initial;

  const Batch& b0 = batches_.front();
  const Eigen::VectorXd h0_pdf = pdf_from_log(b0.component_log_pdf.front());
  initial_estimates_.resize(j_count);
  beta_.resize(j_count);
  double criterion0 = 0.0;
  for (int j = 0; j < j_count; ++j) {
    const CvEstimate est =
        is_estimate(b0.phi.col(j), pdf_from_log(b0.input_log_pdf.col(j)), h0_pdf);
    initial_estimates_[j] = est.value;
    beta_[j] = est.value;
    criterion0 += problem_.weights()[j] * est.integrand_variance;
  }

  const Eigen::VectorXd anchor =
      problem_.weights().array().sqrt() * initial_estimates_.array();
  if (!(anchor.maxCoeff() > 0.0)) {
    throw NumericalError("AdaptiveRun: initialization failed, all initial estimates are zero");
  }
  alpha_ = project_to_floored_simplex(anchor / anchor.sum());

  prev_criterion_ = criterion0;
  prev_remaining_ = schedule_.n_max - n_eval_;
  curr_criterion_ = criterion0;
  curr_remaining_ = prev_remaining_;
  k_ = 0;
}

bool AdaptiveRun::loop_admissible() const {
  if (k_ < 0) throw UsageError("AdaptiveRun: not initialized");
  return n_eval_ < schedule_.n_max / 2;
}

void AdaptiveRun::iterate() {
  if (!loop_admissible()) {
    throw UsageError("AdaptiveRun::iterate: evaluation budget for adaptation is exhausted");
  }
  const int j_count = problem_.target_count();
  const int k = k_ + 1;

  if (k_ >= 1) {
    prev_criterion_ = curr_criterion_;
    prev_remaining_ = curr_remaining_;
  }

  // Cross-entropy updates on the full history.
  const WeightedSample history = concatenated_history();
  std::vector<DensityPtr> new_lambdas;
  new_lambdas.reserve(static_cast<std::size_t>(j_count));
  try {
    for (int j = 0; j < j_count; ++j) {
      if (options_.family == AuxiliaryFamily::kGaussian) {
        new_lambdas.push_back(std::make_shared<GaussianDensity>(gaussian_ce_update(history, j)));
      } else {
        new_lambdas.push_back(std::make_shared<MixtureDensity>(
            mixture_ce_update(history, j, options_.mixture_components)));
      }
    }
  } catch (const NumericalError& e) {
    throw NumericalError("iteration " + std::to_string(k) + ": " + e.what());
  }
  lambdas_ = std::move(new_lambdas);

  // Mixture-weight optimization, warm-started at the previous optimum.
  const Eigen::Index n_hist = history.size();
  Eigen::MatrixXd lambda_pdf(n_hist, j_count);
  for (int j = 0; j < j_count; ++j) {
    lambda_pdf.col(j) = lambdas_[static_cast<std::size_t>(j)]->pdf_rows(history.points);
  }
  Eigen::VectorXd numerators = Eigen::VectorXd::Zero(n_hist);
  for (int j = 0; j < j_count; ++j) {
    const Eigen::ArrayXd phi_f =
        history.target_weights.col(j).array() * history.history_pdf.array();
    const Eigen::ArrayXd residual = phi_f - beta_[j] * lambda_pdf.col(j).array();
    numerators.array() += problem_.weights()[j] * residual.square();
  }
  AlphaObjective objective(std::move(numerators), std::move(lambda_pdf), history.history_pdf);
  try {
    alpha_ = minimize_alpha(objective, alpha_);
  } catch (const NumericalError& e) {
    throw NumericalError("iteration " + std::to_string(k) + ": " + e.what());
  }

  // Fresh sample from the new mixture.
  auto g_alpha = std::make_shared<MixtureDensity>(lambdas_, alpha_);
  for (auto& b : batches_) {
    b.component_log_pdf.push_back(g_alpha->log_pdf_rows(b.points));
  }
  history_components_.push_back(g_alpha);
  g_alpha_ = g_alpha;
  RngStream iter_rng = root_.fork("iter", static_cast<std::uint64_t>(k));
  draw_batch(*g_alpha, schedule_.n_step, iter_rng);
  history_sizes_.push_back(schedule_.n_step);
  n_eval_ += schedule_.n_step;

  // Control parameters from the new sample only.
  const Batch& latest = batches_.back();
  const Eigen::Index n_new = latest.points.rows();
  Eigen::MatrixXd lambda_pdf_new(n_new, j_count);
  for (int j = 0; j < j_count; ++j) {
    lambda_pdf_new.col(j) = lambdas_[static_cast<std::size_t>(j)]->pdf_rows(latest.points);
  }
  const Eigen::VectorXd g_pdf = lambda_pdf_new * alpha_;
  for (Eigen::Index i = 0; i < n_new; ++i) {
    if (!(g_pdf[i] > 0.0)) {
      throw NumericalError("iteration " + std::to_string(k) +
                           ": sampling mixture vanished at one of its own draws");
    }
  }
  for (int j = 0; j < j_count; ++j) {
    try {
      beta_[j] = beta_hat(latest.phi.col(j), pdf_from_log(latest.input_log_pdf.col(j)),
                          lambda_pdf_new.col(j), g_pdf);
    } catch (const DegenerateControlError&) {
      // Constant control/g (J = 1, or coinciding components): the estimator
      // is invariant to beta, so the previous value stands.
    }
  }

  // Criterion value of this iteration, from its own sample.
  double criterion = 0.0;
  for (int j = 0; j < j_count; ++j) {
    Eigen::VectorXd integrand(n_new);
    for (Eigen::Index i = 0; i < n_new; ++i) {
      const double f_pdf = latest.input_log_pdf(i, j) >= kLogUnderflowFloor
                               ? std::exp(latest.input_log_pdf(i, j))
                               : 0.0;
      integrand[i] =
          (latest.phi(i, j) * f_pdf - beta_[j] * lambda_pdf_new(i, j)) / g_pdf[i];
    }
    criterion += problem_.weights()[j] * unbiased_variance(integrand);
  }
  curr_criterion_ = criterion;
  curr_remaining_ = schedule_.n_max - n_eval_;

  k_ = k;
  IterationRecord record;
  record.k = k;
  record.alpha = alpha_;
  record.beta = beta_;
  record.lambda.reserve(static_cast<std::size_t>(j_count));
  for (int j = 0; j < j_count; ++j) {
    record.lambda.push_back(summarize_lambda(*lambdas_[static_cast<std::size_t>(j)]));
  }
  record.criterion = criterion;
  record.criterion_per_budget =
      curr_remaining_ > 0 ? criterion / static_cast<double>(curr_remaining_)
                          : std::numeric_limits<double>::infinity();
  trace_.push_back(std::move(record));
}

bool AdaptiveRun::stopping_check() {
  if (k_ < 1) throw UsageError("AdaptiveRun::stopping_check: no iteration has run");
  if (curr_remaining_ <= 0) {
    stop_reason_ = StopReason::kBudget;
    return true;
  }
  if (stop_inequality(prev_criterion_, prev_remaining_, curr_criterion_, curr_remaining_)) {
    stop_reason_ = StopReason::kCriterion;
    return true;
  }
  return false;
}

RunReport AdaptiveRun::finalize() {
  if (k_ < 1 || !g_alpha_) {
    throw NumericalError("AdaptiveRun::finalize: no adaptation iteration has run");
  }
  const std::int64_t n_final = schedule_.n_max - n_eval_;
  RngStream final_rng = root_.fork("final");
  RunReport report;
  report.estimates =
      cv_estimates_on_sample(problem_, *g_alpha_, lambdas_, beta_, n_final, final_rng);
  report.iterations = k_;
  report.stop_reason = stop_reason_;
  report.trace = trace_;
  report.model_calls = problem_.model_calls() - calls_at_start_;
  report.final_sample_size = n_final;
  return report;
}

RunReport AdaptiveRun::run(const EstimationProblem& problem, const BudgetSchedule& schedule,
                           const AdaptiveOptions& options, std::uint64_t seed) {
  AdaptiveRun run(problem, schedule, options, RngStream(seed));
  run.initialize();
  while (run.loop_admissible()) {
    run.iterate();
    if (run.stopping_check()) break;
  }
  return run.finalize();
}

}  // namespace meiscv
