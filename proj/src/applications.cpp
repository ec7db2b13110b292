#include "meiscv/applications.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "meiscv/errors.hpp"

namespace meiscv {

double cantilever_phi(const Eigen::VectorXd& inputs) {
  if (inputs.size() != 6) throw UsageError("cantilever_phi: expects 6 inputs");
  const double f_x = inputs[0];
  const double f_y = inputs[1];
  const double elastic = inputs[2];
  const double l_x = inputs[3];
  const double l_y = inputs[4];
  const double length = inputs[5];
  if (!(elastic > 0.0) || !(l_x > 0.0) || !(l_y > 0.0) || !(length > 0.0)) {
    throw UsageError("cantilever_phi: structural parameters must be positive");
  }
  const double ax = f_x / (l_x * l_x);
  const double ay = f_y / (l_y * l_y);
  return 4.0 * length * length * length / (1e9 * elastic * l_x * l_y) *
         std::sqrt(ax * ax + ay * ay);
}

double double_factorial_odd(int j) {
  if (j < 0) throw UsageError("double_factorial_odd: j must be >= 0");
  double acc = 1.0;
  for (int i = 1; i <= j; ++i) acc *= 2.0 * i - 1.0;
  return acc;
}

MomentsProblem moments_problem(int target_count, bool unit_weights) {
  if (target_count < 2) throw UsageError("moments_problem: needs at least two targets");
  std::vector<TargetFn> functions;
  functions.reserve(static_cast<std::size_t>(target_count));
  for (int j = 1; j <= target_count; ++j) {
    functions.push_back([j](const Eigen::VectorXd& x) { return std::pow(x[0], 2 * j); });
  }
  // All targets are powers of the same scalar model output.
  auto targets = std::make_shared<PointwiseTargets>(1, std::move(functions), true);

  auto normal = std::make_shared<GaussianDensity>(GaussianDensity::standard(1));
  std::vector<DensityPtr> inputs(static_cast<std::size_t>(target_count), normal);

  Eigen::VectorXd reference(target_count);
  for (int j = 1; j <= target_count; ++j) reference[j - 1] = double_factorial_odd(j);
  Eigen::VectorXd weights(target_count);
  if (unit_weights) {
    weights.setOnes();
  } else {
    weights = reference.array().square().inverse();
  }

  return MomentsProblem{EstimationProblem(std::move(targets), std::move(inputs), weights),
                        reference};
}

namespace {

// Per-point cache of base-model evaluations, keyed by the exact vector bits.
class PointCache {
 public:
  PointCache(const TargetFn& phi, std::uint64_t& calls) : phi_(phi), calls_(calls) {}

  double eval(const Eigen::VectorXd& v) {
    for (const auto& [key, value] : entries_) {
      if (key.size() == v.size() && (key.array() == v.array()).all()) return value;
    }
    const double value = phi_(v);
    ++calls_;
    entries_.emplace_back(v, value);
    return value;
  }

 private:
  const TargetFn& phi_;
  std::uint64_t& calls_;
  std::vector<std::pair<Eigen::VectorXd, double>> entries_;
};

}  // namespace

PickFreezeTargets::PickFreezeTargets(int base_dim, TargetFn phi)
    : base_dim_(base_dim), phi_(std::move(phi)) {
  if (base_dim_ < 1) throw UsageError("PickFreezeTargets: base dimension must be >= 1");
}

std::shared_ptr<TargetFamily> PickFreezeTargets::fresh_clone() const {
  return std::make_shared<PickFreezeTargets>(base_dim_, phi_);
}

Eigen::MatrixXd PickFreezeTargets::evaluate_impl(const Eigen::MatrixXd& points) const {
  const Eigen::Index n = points.rows();
  const int d = base_dim_;
  Eigen::MatrixXd out(n, d + 2);
  std::uint64_t calls = 0;
  Eigen::VectorXd x(d), paired(d);
  for (Eigen::Index r = 0; r < n; ++r) {
    x = points.row(r).head(d);
    PointCache cache(phi_, calls);
    const double base = cache.eval(x);
    for (int i = 0; i < d; ++i) {
      paired = points.row(r).tail(d);
      paired[i] = x[i];
      out(r, i) = base * cache.eval(paired);
    }
    out(r, d) = base;
    out(r, d + 1) = base * base;
  }
  add_model_calls(calls);
  return out;
}

Eigen::VectorXd PickFreezeTargets::evaluate_one_impl(int target, const Eigen::MatrixXd& points) const {
  const Eigen::Index n = points.rows();
  const int d = base_dim_;
  Eigen::VectorXd out(n);
  std::uint64_t calls = 0;
  Eigen::VectorXd x(d), paired(d);
  for (Eigen::Index r = 0; r < n; ++r) {
    x = points.row(r).head(d);
    PointCache cache(phi_, calls);
    const double base = cache.eval(x);
    if (target < d) {
      paired = points.row(r).tail(d);
      paired[target] = x[target];
      out[r] = base * cache.eval(paired);
    } else if (target == d) {
      out[r] = base;
    } else {
      out[r] = base * base;
    }
  }
  add_model_calls(calls);
  return out;
}

namespace {

// Coordinatewise map from independent standard normals to the physical
// input space of a density with independent marginals.
std::function<Eigen::VectorXd(const Eigen::VectorXd&)> standard_normal_to_physical(
    const DensityPtr& base) {
  if (const auto* gauss = dynamic_cast<const GaussianDensity*>(base.get())) {
    Eigen::VectorXd mean = gauss->mean();
    Eigen::VectorXd sd = gauss->covariance().diagonal().array().sqrt();
    return [mean, sd](const Eigen::VectorXd& z) -> Eigen::VectorXd {
      return mean.array() + sd.array() * z.array();
    };
  }
  if (const auto* joint = dynamic_cast<const CorrelatedJointDensity*>(base.get())) {
    const int d = joint->dim();
    Eigen::VectorXd loc(d), scale(d);
    std::vector<bool> log_space(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      const MarginalSpec& m = joint->marginals()[static_cast<std::size_t>(i)];
      if (m.family == MarginalFamily::kNormal) {
        loc[i] = m.mean;
        scale[i] = m.cv * m.mean;
        log_space[static_cast<std::size_t>(i)] = false;
      } else {
        const LogNormalDensity ln = lognormal_from_mean_cv(m.mean, m.cv);
        loc[i] = ln.log_location();
        scale[i] = ln.log_scale();
        log_space[static_cast<std::size_t>(i)] = true;
      }
    }
    return [loc, scale, log_space](const Eigen::VectorXd& z) {
      Eigen::VectorXd x(z.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double v = loc[i] + scale[i] * z[i];
        x[i] = log_space[static_cast<std::size_t>(i)] ? std::exp(v) : v;
      }
      return x;
    };
  }
  if (const auto* ln = dynamic_cast<const LogNormalDensity*>(base.get())) {
    const double mu = ln->log_location();
    const double sigma = ln->log_scale();
    return [mu, sigma](const Eigen::VectorXd& z) {
      return Eigen::VectorXd::Constant(1, std::exp(mu + sigma * z[0]));
    };
  }
  throw UsageError(
      "build_sobol_problem: unsupported base density family for standardization "
      "(Gaussian, LogNormal or independent joint marginals expected)");
}

}  // namespace

SobolProblem build_sobol_problem(TargetFn phi, DensityPtr base_density) {
  if (!base_density) throw UsageError("build_sobol_problem: null base density");
  if (!base_density->independent_marginals()) {
    throw UsageError("build_sobol_problem: inputs must be mutually independent");
  }
  const int d = base_density->dim();

  // The estimation problem is posed in the standardized input space: inputs
  // are mapped coordinatewise from independent standard normals. The map is
  // monotone per coordinate, so every expectation and the pick-freeze
  // pairing are unchanged, and the Gaussian auxiliary family can match the
  // tilted targets on their exact support.
  const auto to_physical = standard_normal_to_physical(base_density);
  TargetFn standardized = [phi = std::move(phi), to_physical](const Eigen::VectorXd& z) {
    return phi(to_physical(z));
  };
  auto targets = std::make_shared<PickFreezeTargets>(d, std::move(standardized));
  auto block = std::make_shared<GaussianDensity>(GaussianDensity::standard(d));
  auto augmented = std::make_shared<ProductDensity>(block, block);
  std::vector<DensityPtr> inputs(static_cast<std::size_t>(d + 2), augmented);
  return SobolProblem{
      EstimationProblem(std::move(targets), std::move(inputs), Eigen::VectorXd::Ones(d + 2)),
      d, base_density};
}

SobolIndices sobol_from_expectations(const Eigen::VectorXd& expectations) {
  const int d = static_cast<int>(expectations.size()) - 2;
  if (d < 1) throw UsageError("sobol_from_expectations: expects at least 3 expectations");
  const double mean = expectations[d];
  const double denom = expectations[d + 1] - mean * mean;
  if (!(denom > 0.0)) {
    throw NumericalError("sobol_from_expectations: variance-degenerate denominator");
  }
  SobolIndices out;
  out.values.resize(d);
  out.clamped.assign(static_cast<std::size_t>(d), false);
  for (int i = 0; i < d; ++i) {
    double s = (expectations[i] - mean * mean) / denom;
    if (s < -0.1 || s > 1.1) {
      out.clamped[static_cast<std::size_t>(i)] = true;
      s = std::min(1.1, std::max(-0.1, s));
    }
    out.values[i] = s;
  }
  return out;
}

namespace {

// Marginal families and coefficients of variation of the six beam inputs.
const MarginalFamily kBeamFamilies[6] = {
    MarginalFamily::kLogNormal, MarginalFamily::kLogNormal, MarginalFamily::kLogNormal,
    MarginalFamily::kNormal,    MarginalFamily::kNormal,    MarginalFamily::kNormal};
const double kBeamCv[6] = {0.08, 0.08, 0.06, 0.1, 0.1, 0.1};

}  // namespace

DensityPtr cantilever_input_density(const Eigen::VectorXd& m) {
  if (m.size() != 9) throw UsageError("cantilever_input_density: expects 9 parameters");
  std::vector<MarginalSpec> marginals;
  marginals.reserve(6);
  for (int i = 0; i < 6; ++i) {
    marginals.push_back(MarginalSpec{kBeamFamilies[i], m[i], kBeamCv[i]});
  }
  std::vector<CorrelationEntry> correlations;
  if (m[6] != 0.0) correlations.push_back(CorrelationEntry{3, 4, m[6]});  // l_X, l_Y
  if (m[7] != 0.0) correlations.push_back(CorrelationEntry{5, 3, m[7]});  // L, l_X
  if (m[8] != 0.0) correlations.push_back(CorrelationEntry{5, 4, m[8]});  // L, l_Y
  return std::make_shared<CorrelatedJointDensity>(std::move(marginals), std::move(correlations));
}

Eigen::VectorXd sobol_reference_parameters() {
  Eigen::VectorXd m(9);
  m << 556.8, 453.6, 200.0, 0.062, 0.0987, 4.29, 0.0, 0.0, 0.0;
  return m;
}

std::vector<std::pair<double, double>> parameter_bounds() {
  return {{525.0, 575.0}, {425.0, 475.0}, {175.0, 225.0},
          {0.06, 0.07},   {0.09, 0.1},    {4.0, 5.0},
          {-0.6, 0.0},    {0.0, 0.5},     {0.0, 0.5}};
}

ParamSensitivityProblem build_param_sensitivity_problem(int target_count, RngStream& rng) {
  if (target_count < 2) {
    throw UsageError("build_param_sensitivity_problem: needs at least two targets");
  }
  const auto bounds = parameter_bounds();
  Eigen::MatrixXd sample = lhs_sample(bounds, target_count, rng);

  std::vector<DensityPtr> inputs;
  inputs.reserve(static_cast<std::size_t>(target_count));
  std::int64_t redraws = 0;
  for (int j = 0; j < target_count; ++j) {
    for (;;) {
      try {
        inputs.push_back(cantilever_input_density(sample.row(j)));
        break;
      } catch (const NumericalError&) {
        ++redraws;  // non-PD correlation triple: redraw this row in the box
        for (int c = 0; c < 9; ++c) {
          sample(j, c) = rng.uniform(bounds[static_cast<std::size_t>(c)].first,
                                     bounds[static_cast<std::size_t>(c)].second);
        }
      }
    }
  }

  auto targets = std::make_shared<SharedFunctionTargets>(
      6, target_count, [](const Eigen::VectorXd& x) { return cantilever_phi(x); });
  return ParamSensitivityProblem{
      EstimationProblem(std::move(targets), std::move(inputs),
                        Eigen::VectorXd::Ones(target_count)),
      std::move(sample), redraws};
}

}  // namespace meiscv
