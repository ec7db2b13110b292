#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "meiscv/rng.hpp"

namespace meiscv {

// Densities report pdf = 0 once the log density drops below this floor;
// likelihood ratios above exp(+700) are treated as overflow by the callers.
inline constexpr double kLogUnderflowFloor = -700.0;

// Evaluable and sampleable probability density over R^d. Implementations are
// immutable after construction and safe to read from many threads; all RNG
// state is caller-owned.
class Density {
 public:
  virtual ~Density() = default;

  virtual int dim() const = 0;

  // Natural log of the density, -inf outside the support.
  double log_pdf(const Eigen::VectorXd& x) const;

  // exp(log_pdf), flushed to 0 below exp(kLogUnderflowFloor). Never NaN.
  double pdf(const Eigen::VectorXd& x) const;

  // n i.i.d. draws, one per row. Deterministic given the stream state.
  Eigen::MatrixXd sample(int n, RngStream& rng) const;

  Eigen::VectorXd log_pdf_rows(const Eigen::MatrixXd& points) const;
  Eigen::VectorXd pdf_rows(const Eigen::MatrixXd& points) const;

  // True when the coordinates are mutually independent under this density.
  virtual bool independent_marginals() const { return false; }

  // Low-level single draw into a caller-provided buffer of size dim().
  virtual void sample_one(RngStream& rng, Eigen::Ref<Eigen::VectorXd> out) const = 0;

 protected:
  virtual double log_pdf_impl(const Eigen::VectorXd& x) const = 0;
};

using DensityPtr = std::shared_ptr<const Density>;

// Multivariate normal with cached Cholesky factor for evaluation and
// sampling. A failed factorization is retried once with diagonal jitter
// 1e-10 * trace/d, then reported as an error.
class GaussianDensity final : public Density {
 public:
  GaussianDensity(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

  static GaussianDensity standard(int dim);

  int dim() const override { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }

  bool independent_marginals() const override;

  void sample_one(RngStream& rng, Eigen::Ref<Eigen::VectorXd> out) const override;

 protected:
  double log_pdf_impl(const Eigen::VectorXd& x) const override;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;  // lower-triangular L with L L^T = cov
  double log_norm_ = 0.0;
};

// Convex combination of K component densities with weights in the simplex.
class MixtureDensity final : public Density {
 public:
  MixtureDensity(std::vector<DensityPtr> components, Eigen::VectorXd weights);

  int dim() const override;
  int component_count() const { return static_cast<int>(components_.size()); }
  const Density& component(int k) const { return *components_.at(static_cast<std::size_t>(k)); }
  DensityPtr component_ptr(int k) const { return components_.at(static_cast<std::size_t>(k)); }
  const Eigen::VectorXd& weights() const { return weights_; }

  void sample_one(RngStream& rng, Eigen::Ref<Eigen::VectorXd> out) const override;

 protected:
  double log_pdf_impl(const Eigen::VectorXd& x) const override;

 private:
  std::vector<DensityPtr> components_;
  Eigen::VectorXd weights_;
};

// One-dimensional lognormal, parameterized on the log scale.
class LogNormalDensity final : public Density {
 public:
  LogNormalDensity(double log_location, double log_scale);

  int dim() const override { return 1; }
  double log_location() const { return mu_; }
  double log_scale() const { return sigma_; }
  double analytic_mean() const { return std::exp(mu_ + 0.5 * sigma_ * sigma_); }

  bool independent_marginals() const override { return true; }

  void sample_one(RngStream& rng, Eigen::Ref<Eigen::VectorXd> out) const override;

 protected:
  double log_pdf_impl(const Eigen::VectorXd& x) const override;

 private:
  double mu_;
  double sigma_;
};

// Moment matching: the returned density has the requested mean and
// coefficient of variation.
LogNormalDensity lognormal_from_mean_cv(double mean, double cv);
DensityPtr make_lognormal_from_mean_cv(double mean, double cv);

enum class MarginalFamily { kNormal, kLogNormal };

// Marginal given by its mean and coefficient of variation (sd / mean).
struct MarginalSpec {
  MarginalFamily family = MarginalFamily::kNormal;
  double mean = 1.0;
  double cv = 0.1;
};

struct CorrelationEntry {
  int i = 0;
  int j = 0;
  double rho = 0.0;
};

// Joint density with Normal / LogNormal marginals coupled by a Gaussian
// copula: the Pearson coefficients are applied directly to the underlying
// Gaussian correlation matrix.
class CorrelatedJointDensity final : public Density {
 public:
  CorrelatedJointDensity(std::vector<MarginalSpec> marginals,
                         std::vector<CorrelationEntry> correlations);

  int dim() const override { return static_cast<int>(marginals_.size()); }
  const std::vector<MarginalSpec>& marginals() const { return marginals_; }
  const Eigen::MatrixXd& gaussian_correlation() const { return corr_; }
  bool has_correlations() const { return has_correlations_; }

  bool independent_marginals() const override { return !has_correlations_; }

  void sample_one(RngStream& rng, Eigen::Ref<Eigen::VectorXd> out) const override;

 protected:
  double log_pdf_impl(const Eigen::VectorXd& x) const override;

 private:
  std::vector<MarginalSpec> marginals_;
  Eigen::MatrixXd corr_;
  Eigen::MatrixXd chol_;
  double log_norm_ = 0.0;
  bool has_correlations_ = false;
  // Per-coordinate transform parameters: Normal (m, s), LogNormal (mu, sigma).
  Eigen::VectorXd loc_;
  Eigen::VectorXd scale_;
};

// Product of two independent factors over the concatenated coordinates.
class ProductDensity final : public Density {
 public:
  ProductDensity(DensityPtr first, DensityPtr second);

  int dim() const override { return first_->dim() + second_->dim(); }
  const Density& first() const { return *first_; }
  const Density& second() const { return *second_; }

  bool independent_marginals() const override {
    return first_->independent_marginals() && second_->independent_marginals();
  }

  void sample_one(RngStream& rng, Eigen::Ref<Eigen::VectorXd> out) const override;

 protected:
  double log_pdf_impl(const Eigen::VectorXd& x) const override;

 private:
  DensityPtr first_;
  DensityPtr second_;
};

// Latin hypercube sample: per coordinate, the n values occupy the n
// equal-width strata of [lo, hi), one point per stratum, uniformly jittered
// and independently permuted across coordinates.
Eigen::MatrixXd lhs_sample(const std::vector<std::pair<double, double>>& bounds,
                           int n, RngStream& rng);

// Declarative description of a joint input density: one mean/cv marginal
// record per coordinate plus Pearson correlation entries. This is the form
// the CLI config file uses.
struct DistributionSpec {
  std::vector<MarginalSpec> marginals;
  std::vector<CorrelationEntry> correlations;
};

MarginalFamily marginal_family_from_name(const std::string& name);
std::string marginal_family_name(MarginalFamily family);

DensityPtr make_density(const DistributionSpec& spec);

}  // namespace meiscv
