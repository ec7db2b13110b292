#pragma once

// Shared test oracles: quadrature, simple statistics, simplex grid search.
// These stay independent of the library code paths they check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace testsupport {

// Adaptive Simpson quadrature on [a, b].
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-10, int depth = 24) {
  struct Impl {
    const std::function<double(double)>& f;
    double recurse(double a, double b, double fa, double fm, double fb, double whole,
                   double tol, int depth) const {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m);
      const double rm = 0.5 * (m + b);
      const double flm = f(lm);
      const double frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
      }
      return recurse(a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
             recurse(m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
    }
  };
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return Impl{f}.recurse(a, b, fa, fm, fb, whole, tol, depth);
}

inline double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

inline double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / static_cast<double>(v.size() - 1);
}

// Standard error of the sample mean.
inline double stderr_of_mean(const std::vector<double>& v) {
  return std::sqrt(variance_of(v) / static_cast<double>(v.size()));
}

// Standard error of the unbiased sample variance, via the fourth central
// moment: Var(s^2) ~ (m4 - (n-3)/(n-1) s^4) / n.
inline double stderr_of_variance(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double m = mean_of(v);
  double m4 = 0.0;
  for (double x : v) m4 += std::pow(x - m, 4);
  m4 /= n;
  const double s2 = variance_of(v);
  const double var_s2 = (m4 - (n - 3.0) / (n - 1.0) * s2 * s2) / n;
  return std::sqrt(std::max(var_s2, 0.0));
}

inline double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Two-sample Kolmogorov-Smirnov test; true when the samples pass at the
// given significance level.
inline bool ks_two_sample_pass(std::vector<double> a, std::vector<double> b, double alpha) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) {
      ++i;
    } else {
      ++j;
    }
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double critical = std::sqrt(-0.5 * std::log(alpha / 2.0)) * std::sqrt((n + m) / (n * m));
  return d <= critical;
}

// Enumerates the simplex S_J at the given resolution and returns the best
// objective value found, refined around the best point. Pure enumeration:
// no gradients, independent of the optimizer under test.
inline double simplex_grid_search(const std::function<double(const Eigen::VectorXd&)>& objective,
                                  int j_count, double resolution, double floor = 1e-6) {
  const int steps = static_cast<int>(std::round(1.0 / resolution));
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_alpha;

  std::function<void(Eigen::VectorXd&, int, int)> enumerate = [&](Eigen::VectorXd& alpha,
                                                                  int index, int left) {
    if (index == j_count - 1) {
      alpha[index] = static_cast<double>(left) * resolution;
      Eigen::VectorXd candidate = alpha.array().max(floor);
      candidate /= candidate.sum();
      const double value = objective(candidate);
      if (value < best) {
        best = value;
        best_alpha = candidate;
      }
      return;
    }
    for (int s = 0; s <= left; ++s) {
      alpha[index] = static_cast<double>(s) * resolution;
      enumerate(alpha, index + 1, left - s);
    }
  };
  Eigen::VectorXd alpha(j_count);
  enumerate(alpha, 0, steps);

  // Local refinement by shrinking coordinate perturbations around the best
  // point; still derivative-free enumeration.
  double step = resolution;
  for (int round = 0; round < 40; ++round) {
    bool improved = false;
    for (int i = 0; i < j_count && !improved; ++i) {
      for (int j = 0; j < j_count && !improved; ++j) {
        if (i == j) continue;
        Eigen::VectorXd candidate = best_alpha;
        candidate[i] += step;
        candidate[j] -= step;
        if (candidate[j] < floor) continue;
        candidate /= candidate.sum();
        const double value = objective(candidate);
        if (value < best) {
          best = value;
          best_alpha = candidate;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
    if (step < 1e-9) break;
  }
  return best;
}

}  // namespace testsupport
