#include "meiscv/densities.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "meiscv/errors.hpp"

namespace meiscv {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2*pi)

double half_log_two_pi(int d) { return 0.5 * kLogTwoPi * d; }

// Cholesky with the jitter-once retry policy shared by the Gaussian families.
Eigen::MatrixXd cholesky_with_jitter(Eigen::MatrixXd m, const char* what) {
  const int d = static_cast<int>(m.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-10 * m.trace() / d;
    m.diagonal().array() += jitter;
    llt.compute(m);
    if (llt.info() != Eigen::Success) {
      throw NumericalError(std::string(what) + ": matrix is not positive-definite");
    }
  }
  Eigen::MatrixXd chol = llt.matrixL();
  for (int i = 0; i < d; ++i) {
    if (!(chol(i, i) > 0.0)) {
      throw NumericalError(std::string(what) + ": non-positive factorization pivot");
    }
  }
  return chol;
}

void check_symmetric(const Eigen::MatrixXd& m, const char* what) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double gap = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (gap > 1e-12 * scale) {
    throw UsageError(std::string(what) + ": matrix is not symmetric");
  }
}

}  // namespace

double Density::log_pdf(const Eigen::VectorXd& x) const {
  if (static_cast<int>(x.size()) != dim()) {
    throw UsageError("density evaluation: point has dimension " +
                     std::to_string(x.size()) + ", expected " + std::to_string(dim()));
  }
  return log_pdf_impl(x);
}

double Density::pdf(const Eigen::VectorXd& x) const {
  const double lp = log_pdf(x);
  if (!(lp >= kLogUnderflowFloor)) return 0.0;  // also catches -inf / NaN
  return std::exp(lp);
}

Eigen::MatrixXd Density::sample(int n, RngStream& rng) const {
  if (n < 1) throw UsageError("sample: n must be >= 1");
  Eigen::MatrixXd out(n, dim());
  Eigen::VectorXd row(dim());
  for (int i = 0; i < n; ++i) {
    sample_one(rng, row);
    out.row(i) = row;
  }
  return out;
}

Eigen::VectorXd Density::log_pdf_rows(const Eigen::MatrixXd& points) const {
  if (static_cast<int>(points.cols()) != dim()) {
    throw UsageError("density evaluation: points have dimension " +
                     std::to_string(points.cols()) + ", expected " + std::to_string(dim()));
  }
  Eigen::VectorXd out(points.rows());
  Eigen::VectorXd x(dim());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    x = points.row(i);
    out[i] = log_pdf_impl(x);
  }
  return out;
}

Eigen::VectorXd Density::pdf_rows(const Eigen::MatrixXd& points) const {
  Eigen::VectorXd lp = log_pdf_rows(points);
  for (Eigen::Index i = 0; i < lp.size(); ++i) {
    lp[i] = lp[i] >= kLogUnderflowFloor ? std::exp(lp[i]) : 0.0;
  }
  return lp;
}

GaussianDensity::GaussianDensity(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
    : mean_(std::move(mean)), cov_(std::move(covariance)) {
  if (mean_.size() == 0) throw UsageError("GaussianDensity: empty mean");
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw UsageError("GaussianDensity: covariance shape does not match mean");
  }
  check_symmetric(cov_, "GaussianDensity");
  cov_ = ((cov_ + cov_.transpose()) / 2.0).eval();
  chol_ = cholesky_with_jitter(cov_, "GaussianDensity");
  log_norm_ = -half_log_two_pi(dim()) - chol_.diagonal().array().log().sum();
}

GaussianDensity GaussianDensity::standard(int dim) {
  return GaussianDensity(Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Identity(dim, dim));
}

bool GaussianDensity::independent_marginals() const {
  const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
  Eigen::MatrixXd off = cov_;
  off.diagonal().setZero();
  return off.cwiseAbs().maxCoeff() <= 1e-14 * scale;
}

double GaussianDensity::log_pdf_impl(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd y =
      chol_.triangularView<Eigen::Lower>().solve(x - mean_);
  return log_norm_ - 0.5 * y.squaredNorm();
}

void GaussianDensity::sample_one(RngStream& rng, Eigen::Ref<Eigen::VectorXd> out) const {
  Eigen::VectorXd z(dim());
  for (int i = 0; i < dim(); ++i) z[i] = rng.normal();
  out = mean_ + chol_ * z;
}

MixtureDensity::MixtureDensity(std::vector<DensityPtr> components, Eigen::VectorXd weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  if (components_.empty()) throw UsageError("MixtureDensity: no components");
  if (static_cast<Eigen::Index>(components_.size()) != weights_.size()) {
    throw UsageError("MixtureDensity: component count does not match weight count");
  }
  for (const auto& c : components_) {
    if (!c) throw UsageError("MixtureDensity: null component");
    if (c->dim() != components_.front()->dim()) {
      throw UsageError("MixtureDensity: components have mixed dimensions");
    }
  }
  if ((weights_.array() < 0.0).any()) {
    throw UsageError("MixtureDensity: negative weight");
  }
  if (std::abs(weights_.sum() - 1.0) > 1e-12) {
    throw UsageError("MixtureDensity: weights sum to " + std::to_string(weights_.sum()));
  }
}

int MixtureDensity::dim() const { return components_.front()->dim(); }

double MixtureDensity::log_pdf_impl(const Eigen::VectorXd& x) const {
  // log-sum-exp over the active components
  double max_term = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd lp(weights_.size());
  for (Eigen::Index k = 0; k < weights_.size(); ++k) {
    if (weights_[k] <= 0.0) {
      lp[k] = -std::numeric_limits<double>::infinity();
      continue;
    }
    lp[k] = std::log(weights_[k]) + components_[static_cast<std::size_t>(k)]->log_pdf(x);
    max_term = std::max(max_term, lp[k]);
  }
  if (!std::isfinite(max_term)) return -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < weights_.size(); ++k) {
    if (std::isfinite(lp[k])) acc += std::exp(lp[k] - max_term);
  }
  return max_term + std::log(acc);
}

void MixtureDensity::sample_one(RngStream& rng, Eigen::Ref<Eigen::VectorXd> out) const {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t pick = components_.size() - 1;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    acc += weights_[static_cast<Eigen::Index>(k)];
    if (u < acc) {
      pick = k;
      break;
    }
  }
  components_[pick]->sample_one(rng, out);
}

LogNormalDensity::LogNormalDensity(double log_location, double log_scale)
    : mu_(log_location), sigma_(log_scale) {
  if (!(sigma_ > 0.0)) throw UsageError("LogNormalDensity: log scale must be positive");
}

double LogNormalDensity::log_pdf_impl(const Eigen::VectorXd& x) const {
  const double v = x[0];
  if (!(v > 0.0)) return -std::numeric_limits<double>::infinity();
  const double z = (std::log(v) - mu_) / sigma_;
  return -std::log(v * sigma_) - half_log_two_pi(1) - 0.5 * z * z;
}

void LogNormalDensity::sample_one(RngStream& rng, Eigen::Ref<Eigen::VectorXd> out) const {
  out[0] = std::exp(mu_ + sigma_ * rng.normal());
}

LogNormalDensity lognormal_from_mean_cv(double mean, double cv) {
  if (!(mean > 0.0) || !(cv > 0.0)) {
    throw UsageError("lognormal_from_mean_cv: mean and cv must be positive");
  }
  const double sigma2 = std::log1p(cv * cv);
  const double mu = std::log(mean) - 0.5 * sigma2;
  return LogNormalDensity(mu, std::sqrt(sigma2));
}

DensityPtr make_lognormal_from_mean_cv(double mean, double cv) {
  return std::make_shared<LogNormalDensity>(lognormal_from_mean_cv(mean, cv));
}

CorrelatedJointDensity::CorrelatedJointDensity(std::vector<MarginalSpec> marginals,
                                               std::vector<CorrelationEntry> correlations)
    : marginals_(std::move(marginals)) {
  const int d = static_cast<int>(marginals_.size());
  if (d == 0) throw UsageError("CorrelatedJointDensity: no marginals");
  loc_.resize(d);
  scale_.resize(d);
  for (int i = 0; i < d; ++i) {
    const MarginalSpec& m = marginals_[static_cast<std::size_t>(i)];
    if (!(m.mean > 0.0) || !(m.cv > 0.0)) {
      throw UsageError("CorrelatedJointDensity: marginal mean and cv must be positive");
    }
    if (m.family == MarginalFamily::kNormal) {
      loc_[i] = m.mean;
      scale_[i] = m.cv * m.mean;
    } else {
      const LogNormalDensity ln = lognormal_from_mean_cv(m.mean, m.cv);
      loc_[i] = ln.log_location();
      scale_[i] = ln.log_scale();
    }
  }

  corr_ = Eigen::MatrixXd::Identity(d, d);
  for (const CorrelationEntry& e : correlations) {
    if (e.i < 0 || e.i >= d || e.j < 0 || e.j >= d || e.i == e.j) {
      throw UsageError("CorrelatedJointDensity: bad correlation indices");
    }
    if (!(std::abs(e.rho) < 1.0)) {
      throw UsageError("CorrelatedJointDensity: |rho| must be < 1");
    }
    corr_(e.i, e.j) = e.rho;
    corr_(e.j, e.i) = e.rho;
    if (e.rho != 0.0) has_correlations_ = true;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(corr_);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("CorrelatedJointDensity: correlation matrix is not positive-definite");
  }
  chol_ = llt.matrixL();
  log_norm_ = -half_log_two_pi(d) - chol_.diagonal().array().log().sum();
}

double CorrelatedJointDensity::log_pdf_impl(const Eigen::VectorXd& x) const {
  const int d = dim();
  Eigen::VectorXd z(d);
  double log_jacobian = 0.0;
  for (int i = 0; i < d; ++i) {
    const MarginalSpec& m = marginals_[static_cast<std::size_t>(i)];
    if (m.family == MarginalFamily::kNormal) {
      z[i] = (x[i] - loc_[i]) / scale_[i];
      log_jacobian -= std::log(scale_[i]);
    } else {
      if (!(x[i] > 0.0)) return -std::numeric_limits<double>::infinity();
      z[i] = (std::log(x[i]) - loc_[i]) / scale_[i];
      log_jacobian -= std::log(scale_[i] * x[i]);
    }
  }
  const Eigen::VectorXd y = chol_.triangularView<Eigen::Lower>().solve(z);
  return log_norm_ - 0.5 * y.squaredNorm() + log_jacobian;
}

void CorrelatedJointDensity::sample_one(RngStream& rng,
                                        Eigen::Ref<Eigen::VectorXd> out) const {
  const int d = dim();
  Eigen::VectorXd xi(d);
  for (int i = 0; i < d; ++i) xi[i] = rng.normal();
  const Eigen::VectorXd z = chol_ * xi;
  for (int i = 0; i < d; ++i) {
    const MarginalSpec& m = marginals_[static_cast<std::size_t>(i)];
    out[i] = m.family == MarginalFamily::kNormal ? loc_[i] + scale_[i] * z[i]
                                                 : std::exp(loc_[i] + scale_[i] * z[i]);
  }
}

ProductDensity::ProductDensity(DensityPtr first, DensityPtr second)
    : first_(std::move(first)), second_(std::move(second)) {
  if (!first_ || !second_) throw UsageError("ProductDensity: null factor");
}

double ProductDensity::log_pdf_impl(const Eigen::VectorXd& x) const {
  const int d1 = first_->dim();
  return first_->log_pdf(x.head(d1)) + second_->log_pdf(x.tail(second_->dim()));
}

void ProductDensity::sample_one(RngStream& rng, Eigen::Ref<Eigen::VectorXd> out) const {
  first_->sample_one(rng, out.head(first_->dim()));
  second_->sample_one(rng, out.tail(second_->dim()));
}

MarginalFamily marginal_family_from_name(const std::string& name) {
  if (name == "normal") return MarginalFamily::kNormal;
  if (name == "lognormal") return MarginalFamily::kLogNormal;
  throw UsageError("unknown marginal family '" + name + "'");
}

std::string marginal_family_name(MarginalFamily family) {
  return family == MarginalFamily::kNormal ? "normal" : "lognormal";
}

DensityPtr make_density(const DistributionSpec& spec) {
  if (spec.marginals.empty()) {
    throw UsageError("make_density: spec has no marginals");
  }
  return std::make_shared<CorrelatedJointDensity>(spec.marginals, spec.correlations);
}

Eigen::MatrixXd lhs_sample(const std::vector<std::pair<double, double>>& bounds,
                           int n, RngStream& rng) {
  if (n < 1) throw UsageError("lhs_sample: n must be >= 1");
  const int p = static_cast<int>(bounds.size());
  if (p == 0) throw UsageError("lhs_sample: no coordinates");
  for (const auto& [lo, hi] : bounds) {
    if (!(lo < hi)) throw UsageError("lhs_sample: bounds must satisfy lo < hi");
  }
  Eigen::MatrixXd out(n, p);
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int c = 0; c < p; ++c) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) {  // Fisher-Yates with our own stream
      const auto j = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    const auto [lo, hi] = bounds[static_cast<std::size_t>(c)];
    const double width = (hi - lo) / n;
    for (int i = 0; i < n; ++i) {
      out(i, c) = lo + (perm[static_cast<std::size_t>(i)] + rng.uniform()) * width;
    }
  }
  return out;
}

}  // namespace meiscv
