#include "meiscv/estimators.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "meiscv/errors.hpp"

namespace meiscv {

namespace {

constexpr double kRatioOverflow = 1.014232054735004e+304;  // exp(700)

void check_lengths(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const char* what) {
  if (a.size() != b.size()) {
    throw UsageError(std::string(what) + ": input vectors have mismatched lengths");
  }
}

// phi * f / g with the support and overflow guards shared by the estimators.
Eigen::VectorXd weighted_ratio(const Eigen::VectorXd& numerator, const Eigen::VectorXd& g_pdf,
                               const char* what) {
  Eigen::VectorXd out(numerator.size());
  for (Eigen::Index i = 0; i < numerator.size(); ++i) {
    if (!(g_pdf[i] > 0.0)) {
      throw NumericalError(std::string(what) + ": support violation, sampling density is zero at point " +
                           std::to_string(i));
    }
    out[i] = numerator[i] / g_pdf[i];
    if (!std::isfinite(out[i]) || std::abs(out[i]) > kRatioOverflow) {
      throw NumericalError(std::string(what) + ": likelihood ratio overflow at point " +
                           std::to_string(i));
    }
  }
  return out;
}

CvEstimate summarize(const Eigen::VectorXd& integrand, double shift) {
  CvEstimate est;
  est.n = integrand.size();
  const double mean = integrand.mean();
  est.value = mean + shift;
  est.integrand_variance =
      est.n >= 2 ? (integrand.array() - mean).square().sum() / static_cast<double>(est.n - 1)
                 : 0.0;
  return est;
}

}  // namespace

CvEstimate is_estimate(const Eigen::VectorXd& phi_values, const Eigen::VectorXd& f_pdf,
                       const Eigen::VectorXd& g_pdf) {
  check_lengths(phi_values, f_pdf, "is_estimate");
  check_lengths(phi_values, g_pdf, "is_estimate");
  if (phi_values.size() < 1) throw UsageError("is_estimate: empty sample");
  const Eigen::VectorXd integrand =
      weighted_ratio(phi_values.cwiseProduct(f_pdf), g_pdf, "is_estimate");
  return summarize(integrand, 0.0);
}

CvEstimate cv_estimate(const Eigen::VectorXd& phi_values, const Eigen::VectorXd& f_pdf,
                       const Eigen::VectorXd& control_pdf, const Eigen::VectorXd& g_pdf,
                       double beta) {
  check_lengths(phi_values, f_pdf, "cv_estimate");
  check_lengths(phi_values, control_pdf, "cv_estimate");
  check_lengths(phi_values, g_pdf, "cv_estimate");
  if (phi_values.size() < 1) throw UsageError("cv_estimate: empty sample");
  const Eigen::VectorXd integrand = weighted_ratio(
      phi_values.cwiseProduct(f_pdf) - beta * control_pdf, g_pdf, "cv_estimate");
  return summarize(integrand, beta);
}

double beta_hat(const Eigen::VectorXd& phi_values, const Eigen::VectorXd& f_pdf,
                const Eigen::VectorXd& control_pdf, const Eigen::VectorXd& g_pdf) {
  check_lengths(phi_values, f_pdf, "beta_hat");
  check_lengths(phi_values, control_pdf, "beta_hat");
  check_lengths(phi_values, g_pdf, "beta_hat");
  const Eigen::Index n = phi_values.size();
  if (n < 2) throw UsageError("beta_hat: needs at least two points");
  const Eigen::VectorXd t = weighted_ratio(phi_values.cwiseProduct(f_pdf), g_pdf, "beta_hat");
  const Eigen::VectorXd c = weighted_ratio(control_pdf, g_pdf, "beta_hat");
  const Eigen::ArrayXd tc = t.array() - t.mean();
  const Eigen::ArrayXd cc = c.array() - c.mean();
  const double var_c = cc.square().sum() / static_cast<double>(n - 1);
  if (!(var_c > 0.0)) {
    throw DegenerateControlError(
        "beta_hat: degenerate control, control/g is constant over the sample");
  }
  const double cov = (tc * cc).sum() / static_cast<double>(n - 1);
  return cov / var_c;
}

double weighted_criterion(const std::vector<CvEstimate>& estimates,
                          const Eigen::VectorXd& weights, std::int64_t n_final) {
  if (static_cast<Eigen::Index>(estimates.size()) != weights.size()) {
    throw UsageError("weighted_criterion: estimate count does not match weight count");
  }
  if (n_final < 1) throw UsageError("weighted_criterion: n_final must be >= 1");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    acc += weights[j] * estimates[static_cast<std::size_t>(j)].integrand_variance;
  }
  return acc / static_cast<double>(n_final);
}

Eigen::MatrixXd TargetFamily::evaluate(const Eigen::MatrixXd& points) const {
  if (static_cast<int>(points.cols()) != dim()) {
    throw UsageError("TargetFamily::evaluate: points have dimension " +
                     std::to_string(points.cols()) + ", expected " + std::to_string(dim()));
  }
  return evaluate_impl(points);
}

Eigen::VectorXd TargetFamily::evaluate_one(int target, const Eigen::MatrixXd& points) const {
  if (target < 0 || target >= target_count()) {
    throw UsageError("TargetFamily::evaluate_one: target index out of range");
  }
  if (static_cast<int>(points.cols()) != dim()) {
    throw UsageError("TargetFamily::evaluate_one: points have wrong dimension");
  }
  return evaluate_one_impl(target, points);
}

PointwiseTargets::PointwiseTargets(int dim, std::vector<TargetFn> functions, bool shared_model)
    : dim_(dim), functions_(std::move(functions)), shared_model_(shared_model) {
  if (dim_ < 1) throw UsageError("PointwiseTargets: dimension must be >= 1");
  if (functions_.empty()) throw UsageError("PointwiseTargets: no target functions");
}

std::shared_ptr<TargetFamily> PointwiseTargets::fresh_clone() const {
  return std::make_shared<PointwiseTargets>(dim_, functions_, shared_model_);
}

Eigen::MatrixXd PointwiseTargets::evaluate_impl(const Eigen::MatrixXd& points) const {
  const Eigen::Index n = points.rows();
  const int j_count = target_count();
  Eigen::MatrixXd out(n, j_count);
  Eigen::VectorXd x(dim_);
  for (Eigen::Index i = 0; i < n; ++i) {
    x = points.row(i);
    for (int j = 0; j < j_count; ++j) out(i, j) = functions_[static_cast<std::size_t>(j)](x);
  }
  add_model_calls(static_cast<std::uint64_t>(n) *
                  (shared_model_ ? 1u : static_cast<std::uint64_t>(j_count)));
  return out;
}

Eigen::VectorXd PointwiseTargets::evaluate_one_impl(int target, const Eigen::MatrixXd& points) const {
  const Eigen::Index n = points.rows();
  Eigen::VectorXd out(n);
  Eigen::VectorXd x(dim_);
  for (Eigen::Index i = 0; i < n; ++i) {
    x = points.row(i);
    out[i] = functions_[static_cast<std::size_t>(target)](x);
  }
  add_model_calls(static_cast<std::uint64_t>(n));
  return out;
}

SharedFunctionTargets::SharedFunctionTargets(int dim, int target_count, TargetFn phi)
    : dim_(dim), target_count_(target_count), phi_(std::move(phi)) {
  if (dim_ < 1) throw UsageError("SharedFunctionTargets: dimension must be >= 1");
  if (target_count_ < 1) throw UsageError("SharedFunctionTargets: needs at least one target");
}

std::shared_ptr<TargetFamily> SharedFunctionTargets::fresh_clone() const {
  return std::make_shared<SharedFunctionTargets>(dim_, target_count_, phi_);
}

Eigen::MatrixXd SharedFunctionTargets::evaluate_impl(const Eigen::MatrixXd& points) const {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd out(n, target_count_);
  Eigen::VectorXd x(dim_);
  for (Eigen::Index i = 0; i < n; ++i) {
    x = points.row(i);
    out.row(i).setConstant(phi_(x));
  }
  add_model_calls(static_cast<std::uint64_t>(n));
  return out;
}

Eigen::VectorXd SharedFunctionTargets::evaluate_one_impl(int, const Eigen::MatrixXd& points) const {
  const Eigen::Index n = points.rows();
  Eigen::VectorXd out(n);
  Eigen::VectorXd x(dim_);
  for (Eigen::Index i = 0; i < n; ++i) {
    x = points.row(i);
    out[i] = phi_(x);
  }
  add_model_calls(static_cast<std::uint64_t>(n));
  return out;
}

EstimationProblem::EstimationProblem(std::shared_ptr<const TargetFamily> targets,
                                     std::vector<DensityPtr> input_densities,
                                     Eigen::VectorXd weights)
    : targets_(std::move(targets)),
      input_densities_(std::move(input_densities)),
      weights_(std::move(weights)) {
  if (!targets_) throw UsageError("EstimationProblem: null target family");
  const int j_count = targets_->target_count();
  if (j_count < 1) throw UsageError("EstimationProblem: needs at least one target");
  if (static_cast<int>(input_densities_.size()) != j_count) {
    throw UsageError("EstimationProblem: input density count does not match target count");
  }
  if (weights_.size() != j_count) {
    throw UsageError("EstimationProblem: weight count does not match target count");
  }
  if (!(weights_.array() > 0.0).all()) {
    throw UsageError("EstimationProblem: weights must be positive");
  }
  single_input_ = true;
  for (const auto& f : input_densities_) {
    if (!f) throw UsageError("EstimationProblem: null input density");
    if (f->dim() != targets_->dim()) {
      throw UsageError("EstimationProblem: input density dimension does not match targets");
    }
    if (f != input_densities_.front()) single_input_ = false;
  }
}

const Density& EstimationProblem::input_density(int j) const {
  return *input_densities_.at(static_cast<std::size_t>(j));
}

DensityPtr EstimationProblem::input_density_ptr(int j) const {
  return input_densities_.at(static_cast<std::size_t>(j));
}

Eigen::MatrixXd EstimationProblem::input_log_pdfs(const Eigen::MatrixXd& points) const {
  const int j_count = target_count();
  Eigen::MatrixXd out(points.rows(), j_count);
  if (single_input_) {
    out.colwise() = input_densities_.front()->log_pdf_rows(points);
    return out;
  }
  for (int j = 0; j < j_count; ++j) {
    out.col(j) = input_densities_[static_cast<std::size_t>(j)]->log_pdf_rows(points);
  }
  return out;
}

EstimationProblem EstimationProblem::with_fresh_counter() const {
  return EstimationProblem(targets_->fresh_clone(), input_densities_, weights_);
}

std::vector<CvEstimate> naive_mc_baseline(const EstimationProblem& problem,
                                          std::int64_t n_total, RngStream& rng) {
  const int j_count = problem.target_count();
  const std::int64_t per_target = n_total / j_count;  // remainder discarded
  if (per_target < 1) throw UsageError("naive_mc_baseline: budget too small for the target count");
  std::vector<CvEstimate> out;
  out.reserve(static_cast<std::size_t>(j_count));
  for (int j = 0; j < j_count; ++j) {
    const Eigen::MatrixXd pts =
        problem.input_density(j).sample(static_cast<int>(per_target), rng);
    const Eigen::VectorXd values = problem.targets().evaluate_one(j, pts);
    out.push_back(summarize(values, 0.0));
  }
  return out;
}

std::vector<CvEstimate> mc_mixture_baseline(const EstimationProblem& problem,
                                            std::int64_t n_total, RngStream& rng) {
  if (n_total < 2) throw UsageError("mc_mixture_baseline: needs at least two points");
  const int j_count = problem.target_count();

  DensityPtr h;
  if (problem.single_input_density()) {
    h = problem.input_density_ptr(0);
  } else {
    std::vector<DensityPtr> comps;
    comps.reserve(static_cast<std::size_t>(j_count));
    for (int j = 0; j < j_count; ++j) comps.push_back(problem.input_density_ptr(j));
    h = std::make_shared<MixtureDensity>(
        std::move(comps), Eigen::VectorXd::Constant(j_count, 1.0 / j_count));
  }

  const Eigen::MatrixXd pts = h->sample(static_cast<int>(n_total), rng);
  const Eigen::MatrixXd phi = problem.targets().evaluate(pts);
  const Eigen::VectorXd h_log = h->log_pdf_rows(pts);
  const Eigen::MatrixXd f_log = problem.input_log_pdfs(pts);

  std::vector<CvEstimate> out;
  out.reserve(static_cast<std::size_t>(j_count));
  for (int j = 0; j < j_count; ++j) {
    Eigen::VectorXd integrand(n_total);
    for (Eigen::Index i = 0; i < n_total; ++i) {
      const double log_ratio = f_log(i, j) - h_log[i];
      if (log_ratio > 700.0) {
        throw NumericalError("mc_mixture_baseline: likelihood ratio overflow at point " +
                             std::to_string(i));
      }
      integrand[i] = phi(i, j) * std::exp(log_ratio);
    }
    out.push_back(summarize(integrand, 0.0));
  }
  return out;
}

}  // namespace meiscv
