#include "meiscv/simplex_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "meiscv/errors.hpp"

namespace meiscv {

AlphaObjective::AlphaObjective(Eigen::VectorXd numerators_in, Eigen::MatrixXd component_pdfs_in,
                               Eigen::VectorXd history_pdf_in)
    : numerators(std::move(numerators_in)),
      component_pdfs(std::move(component_pdfs_in)),
      history_pdf(std::move(history_pdf_in)) {
  if (numerators.size() != component_pdfs.rows() || numerators.size() != history_pdf.size()) {
    throw UsageError("AlphaObjective: row counts do not match");
  }
  if (component_pdfs.cols() < 1) throw UsageError("AlphaObjective: no components");
  if ((numerators.array() < 0.0).any()) {
    throw UsageError("AlphaObjective: negative numerator");
  }
  if (!(history_pdf.array() > 0.0).all()) {
    throw UsageError("AlphaObjective: history density must be positive at every point");
  }
  scaled_ = numerators.cwiseQuotient(history_pdf);
}

bool in_floored_simplex(const Eigen::VectorXd& alpha, double floor) {
  if (alpha.size() < 1) return false;
  if ((alpha.array() < floor * (1.0 - 1e-9)).any()) return false;
  return std::abs(alpha.sum() - 1.0) <= 1e-9;
}

namespace {

void check_feasible(const AlphaObjective& objective, const Eigen::VectorXd& alpha,
                    const char* what) {
  if (alpha.size() != objective.component_pdfs.cols()) {
    throw UsageError(std::string(what) + ": alpha has wrong length");
  }
  if (!in_floored_simplex(alpha)) {
    throw UsageError(std::string(what) + ": alpha is outside the floored simplex");
  }
}

}  // namespace

double objective_value(const AlphaObjective& objective, const Eigen::VectorXd& alpha) {
  check_feasible(objective, alpha, "objective_value");
  const Eigen::VectorXd mix = objective.component_pdfs * alpha;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mix.size(); ++i) {
    if (objective.scaled_[i] == 0.0) continue;
    if (!(mix[i] > 0.0)) return std::numeric_limits<double>::infinity();
    acc += objective.scaled_[i] / mix[i];
  }
  return acc;
}

Eigen::VectorXd objective_gradient(const AlphaObjective& objective, const Eigen::VectorXd& alpha) {
  check_feasible(objective, alpha, "objective_gradient");
  const Eigen::VectorXd mix = objective.component_pdfs * alpha;
  Eigen::VectorXd coeff(mix.size());
  for (Eigen::Index i = 0; i < mix.size(); ++i) {
    if (objective.scaled_[i] == 0.0) {
      coeff[i] = 0.0;
      continue;
    }
    if (!(mix[i] > 0.0)) {
      throw NumericalError("objective_gradient: mixture density vanished under a positive term");
    }
    coeff[i] = objective.scaled_[i] / (mix[i] * mix[i]);
  }
  return -(objective.component_pdfs.transpose() * coeff);
}

Eigen::VectorXd project_to_floored_simplex(const Eigen::VectorXd& v, double floor) {
  const Eigen::Index j_count = v.size();
  if (j_count < 1) throw UsageError("project_to_floored_simplex: empty vector");
  const double mass = 1.0 - floor * static_cast<double>(j_count);
  if (!(mass >= 0.0)) {
    throw UsageError("project_to_floored_simplex: floor infeasible for this many components");
  }
  // Shift out the floor, project onto the simplex of the remaining mass.
  Eigen::VectorXd u = v.array() - floor;
  std::vector<double> sorted(u.data(), u.data() + j_count);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double running = 0.0;
  double theta = 0.0;
  int support = 0;
  for (Eigen::Index k = 0; k < j_count; ++k) {
    running += sorted[static_cast<std::size_t>(k)];
    const double candidate = (running - mass) / static_cast<double>(k + 1);
    if (sorted[static_cast<std::size_t>(k)] - candidate > 0.0) {
      theta = candidate;
      support = static_cast<int>(k + 1);
    }
  }
  if (support == 0) theta = (running - mass) / static_cast<double>(j_count);
  Eigen::VectorXd out(j_count);
  for (Eigen::Index j = 0; j < j_count; ++j) {
    out[j] = std::max(0.0, u[j] - theta) + floor;
  }
  // Absorb the clamping/rounding residue into the largest coordinate so the
  // weights sum to one exactly.
  Eigen::Index top = 0;
  out.maxCoeff(&top);
  out[top] -= out.sum() - 1.0;
  return out;
}

Eigen::VectorXd minimize_alpha(const AlphaObjective& objective,
                               const Eigen::VectorXd& alpha_start,
                               const MinimizeOptions& options,
                               std::vector<double>* objective_trace) {
  check_feasible(objective, alpha_start, "minimize_alpha");
  const Eigen::Index j_count = alpha_start.size();
  if (j_count == 1) return Eigen::VectorXd::Ones(1);

  Eigen::VectorXd x = alpha_start;
  double fx = objective_value(objective, x);
  if (!std::isfinite(fx)) {
    throw NumericalError("minimize_alpha: objective is not finite at the starting point");
  }
  if (objective_trace) objective_trace->push_back(fx);

  double step = 1.0;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Eigen::VectorXd grad = objective_gradient(objective, x);

    // First-order KKT residual on the floored simplex: the gradient must be
    // constant over the free coordinates and no smaller on the active ones.
    double mu = 0.0;
    int free_count = 0;
    for (Eigen::Index j = 0; j < j_count; ++j) {
      if (x[j] > kAlphaFloor + 1e-12) {
        mu += grad[j];
        ++free_count;
      }
    }
    if (free_count > 0) {
      mu /= free_count;
      double residual = 0.0;
      for (Eigen::Index j = 0; j < j_count; ++j) {
        if (x[j] > kAlphaFloor + 1e-12) {
          residual = std::max(residual, std::abs(grad[j] - mu));
        } else {
          residual = std::max(residual, std::max(0.0, mu - grad[j]));
        }
      }
      const double scale = std::max(1.0, grad.cwiseAbs().maxCoeff());
      if (residual <= options.kkt_tolerance * scale) break;
    }

    // Backtracking line search along the projection arc.
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Eigen::VectorXd y = project_to_floored_simplex(x - step * grad);
      const double gap = grad.dot(y - x);  // <= 0 by the projection inequality
      if (gap >= 0.0) break;               // x is a fixed point of the arc
      const double fy = objective_value(objective, y);
      if (fy <= fx + 1e-4 * gap) {
        x = y;
        fx = fy;
        step *= 1.5;
        moved = true;
        if (objective_trace) objective_trace->push_back(fx);
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;  // no descent direction left at this scale
  }
  return x;
}

}  // namespace meiscv
