#include "meiscv/ce_update.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "meiscv/errors.hpp"

namespace meiscv {

namespace {

constexpr double kWeightCapFactor = 1e6;

double median_of_positive(const Eigen::VectorXd& w) {
  std::vector<double> pos;
  pos.reserve(static_cast<std::size_t>(w.size()));
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) pos.push_back(w[i]);
  }
  if (pos.empty()) return 0.0;
  const std::size_t mid = pos.size() / 2;
  std::nth_element(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(mid), pos.end());
  return pos[mid];
}

// CE weights for one target, capped at 1e6 x median positive weight.
Eigen::VectorXd capped_weights(const WeightedSample& sample, int target_index) {
  if (target_index < 0 || target_index >= sample.target_weights.cols()) {
    throw UsageError("ce_update: target index out of range");
  }
  Eigen::VectorXd w = sample.target_weights.col(target_index);
  const double med = median_of_positive(w);
  if (med > 0.0) {
    const double cap = kWeightCapFactor * med;
    w = w.cwiseMin(cap);
  }
  return w;
}

void check_fit_preconditions(const WeightedSample& sample, const Eigen::VectorXd& w) {
  if (!(w.sum() > 0.0)) {
    throw NumericalError("ce_update: target unreachable from history, all weights are zero");
  }
  const Eigen::Index positive = (w.array() > 0.0).count();
  if (positive < sample.dim() + 1) {
    throw NumericalError("ce_update: fewer than d+1 points carry positive weight");
  }
}

struct WeightedMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

WeightedMoments weighted_moments(const Eigen::MatrixXd& points, const Eigen::VectorXd& w) {
  const double total = w.sum();
  WeightedMoments m;
  m.mean = (points.transpose() * w) / total;
  const Eigen::MatrixXd centered = points.rowwise() - m.mean.transpose();
  m.cov = (centered.transpose() * w.asDiagonal() * centered) / total;
  return m;
}

}  // namespace

WeightedSample WeightedSample::build(const Eigen::MatrixXd& points,
                                     const Eigen::VectorXd& history_log_pdf,
                                     const Eigen::MatrixXd& phi_values,
                                     const Eigen::MatrixXd& input_log_pdfs) {
  const Eigen::Index n = points.rows();
  if (history_log_pdf.size() != n || phi_values.rows() != n || input_log_pdfs.rows() != n) {
    throw UsageError("WeightedSample: row counts do not match");
  }
  if (phi_values.cols() != input_log_pdfs.cols()) {
    throw UsageError("WeightedSample: target counts do not match");
  }
  const Eigen::Index j_count = phi_values.cols();

  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (history_log_pdf[i] >= kLogUnderflowFloor) keep.push_back(i);
  }

  WeightedSample out;
  out.dropped_points = n - static_cast<std::int64_t>(keep.size());
  out.points.resize(static_cast<Eigen::Index>(keep.size()), points.cols());
  out.history_pdf.resize(static_cast<Eigen::Index>(keep.size()));
  out.target_weights.resize(static_cast<Eigen::Index>(keep.size()), j_count);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const Eigen::Index i = keep[r];
    const auto row = static_cast<Eigen::Index>(r);
    out.points.row(row) = points.row(i);
    out.history_pdf[row] = std::exp(history_log_pdf[i]);
    for (Eigen::Index j = 0; j < j_count; ++j) {
      const double log_ratio = input_log_pdfs(i, j) - history_log_pdf[i];
      if (log_ratio > 700.0) {
        throw NumericalError("WeightedSample: likelihood ratio overflow at point " +
                             std::to_string(i));
      }
      const double w = phi_values(i, j) * std::exp(log_ratio);
      if (!std::isfinite(w) || w < 0.0) {
        throw NumericalError("WeightedSample: invalid cross-entropy weight at point " +
                             std::to_string(i));
      }
      out.target_weights(row, j) = w;
    }
  }
  return out;
}

GaussianDensity gaussian_ce_update(const WeightedSample& sample, int target_index) {
  const Eigen::VectorXd w = capped_weights(sample, target_index);
  check_fit_preconditions(sample, w);
  const WeightedMoments m = weighted_moments(sample.points, w);
  return GaussianDensity(m.mean, m.cov);  // jitter-once policy applies here
}

double weighted_log_likelihood(const Density& density, const Eigen::MatrixXd& points,
                               const Eigen::VectorXd& weights) {
  if (points.rows() != weights.size()) {
    throw UsageError("weighted_log_likelihood: row counts do not match");
  }
  const Eigen::VectorXd lp = density.log_pdf_rows(points);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) acc += weights[i] * lp[i];
  }
  return acc;
}

namespace {

struct MixtureFit {
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;
  Eigen::VectorXd pis;
};

// Deterministic initialization: spread component means along the principal
// axis of the weighted covariance, all covariances equal to the pooled one.
MixtureFit initial_fit(const Eigen::MatrixXd& points, const Eigen::VectorXd& w, int k_count) {
  const WeightedMoments m = weighted_moments(points, w);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.cov);
  const Eigen::VectorXd axis = eig.eigenvectors().rightCols(1);
  const double spread = std::sqrt(std::max(eig.eigenvalues().maxCoeff(), 1e-300));
  MixtureFit fit;
  fit.pis = Eigen::VectorXd::Constant(k_count, 1.0 / k_count);
  for (int k = 0; k < k_count; ++k) {
    const double offset =
        k_count == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(k) / (k_count - 1);
    fit.means.push_back(m.mean + offset * spread * axis);
    fit.covs.push_back(m.cov);
  }
  return fit;
}

MixtureDensity mixture_from_fit(const MixtureFit& fit) {
  std::vector<DensityPtr> comps;
  comps.reserve(fit.means.size());
  for (std::size_t k = 0; k < fit.means.size(); ++k) {
    comps.push_back(std::make_shared<GaussianDensity>(fit.means[k], fit.covs[k]));
  }
  Eigen::VectorXd pis = fit.pis / fit.pis.sum();
  return MixtureDensity(std::move(comps), std::move(pis));
}

// One weighted-EM pass at fixed K. Returns false when a component collapsed
// (the caller refits with K - 1).
bool run_em(const Eigen::MatrixXd& points, const Eigen::VectorXd& w, int k_count,
            MixtureFit& fit, std::vector<double>* loglik_trace) {
  constexpr int kMaxIterations = 200;
  constexpr double kGainTolerance = 1e-8;
  constexpr double kCollapseWeight = 1e-8;

  const Eigen::Index n = points.rows();
  const double w_total = w.sum();
  fit = initial_fit(points, w, k_count);

  double prev_ll = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd log_resp(n, k_count);
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    // E step on the current fit
    std::vector<GaussianDensity> comps;
    comps.reserve(static_cast<std::size_t>(k_count));
    for (int k = 0; k < k_count; ++k) {
      try {
        comps.emplace_back(fit.means[static_cast<std::size_t>(k)],
                           fit.covs[static_cast<std::size_t>(k)]);
      } catch (const NumericalError&) {
        return false;  // singular component
      }
    }
    Eigen::VectorXd x(points.cols());
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      x = points.row(i);
      double max_term = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < k_count; ++k) {
        log_resp(i, k) = std::log(fit.pis[k]) + comps[static_cast<std::size_t>(k)].log_pdf(x);
        max_term = std::max(max_term, log_resp(i, k));
      }
      double denom = 0.0;
      for (int k = 0; k < k_count; ++k) denom += std::exp(log_resp(i, k) - max_term);
      const double log_mix = max_term + std::log(denom);
      for (int k = 0; k < k_count; ++k) log_resp(i, k) -= log_mix;
      if (w[i] > 0.0) ll += w[i] * log_mix;
    }
    if (loglik_trace) loglik_trace->push_back(ll);

    if (ll - prev_ll < kGainTolerance && iter > 0) break;
    prev_ll = ll;

    // M step with the CE weights folded into the responsibilities
    for (int k = 0; k < k_count; ++k) {
      Eigen::VectorXd r = (log_resp.col(k).array().exp() * w.array()).matrix();
      const double r_total = r.sum();
      if (!(r_total > kCollapseWeight * w_total)) return false;  // collapsed
      fit.pis[k] = r_total / w_total;
      const WeightedMoments m = weighted_moments(points, r);
      fit.means[static_cast<std::size_t>(k)] = m.mean;
      fit.covs[static_cast<std::size_t>(k)] = m.cov;
    }
  }
  return true;
}

}  // namespace

MixtureDensity mixture_ce_update(const WeightedSample& sample, int target_index,
                                 int component_count, std::vector<double>* loglik_trace) {
  if (component_count < 1) throw UsageError("mixture_ce_update: needs at least one component");
  const Eigen::VectorXd w = capped_weights(sample, target_index);
  check_fit_preconditions(sample, w);

  if (component_count == 1) {
    std::vector<DensityPtr> comps{
        std::make_shared<GaussianDensity>(gaussian_ce_update(sample, target_index))};
    return MixtureDensity(std::move(comps), Eigen::VectorXd::Ones(1));
  }

  for (int k = component_count; k >= 1; --k) {
    if (k == 1) {
      std::vector<DensityPtr> comps{
          std::make_shared<GaussianDensity>(gaussian_ce_update(sample, target_index))};
      return MixtureDensity(std::move(comps), Eigen::VectorXd::Ones(1));
    }
    if (loglik_trace) loglik_trace->clear();
    MixtureFit fit;
    if (run_em(sample.points, w, k, fit, loglik_trace)) {
      try {
        return mixture_from_fit(fit);
      } catch (const NumericalError&) {
        continue;  // a component went singular at the very end; drop one
      }
    }
  }
  throw NumericalError("mixture_ce_update: no component count admits a stable fit");
}

}  // namespace meiscv
