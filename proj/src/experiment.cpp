#include "meiscv/experiment.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <utility>

#include "meiscv/applications.hpp"
#include "meiscv/errors.hpp"
#include "meiscv/parallel.hpp"

namespace meiscv {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string weight_mode_name(WeightMode mode) {
  return mode == WeightMode::kUnit ? "unit" : "inverse-square-target";
}

WeightMode weight_mode_from_name(const std::string& name) {
  if (name == "unit") return WeightMode::kUnit;
  if (name == "inverse-square-target") return WeightMode::kInverseSquareTarget;
  throw UsageError("config: unknown weight mode '" + name + "'");
}

std::string h0_mode_name(InitialMixture mode) {
  return mode == InitialMixture::kUniform ? "uniform" : "weighted";
}

InitialMixture h0_mode_from_name(const std::string& name) {
  if (name == "uniform") return InitialMixture::kUniform;
  if (name == "weighted") return InitialMixture::kWeighted;
  throw UsageError("config: unknown h0 mode '" + name + "'");
}

std::string family_name(AuxiliaryFamily family, int components) {
  if (family == AuxiliaryFamily::kGaussian) return "gaussian";
  return "mixture-" + std::to_string(components);
}

void family_from_name(const std::string& name, AuxiliaryFamily& family, int& components) {
  if (name == "gaussian") {
    family = AuxiliaryFamily::kGaussian;
    return;
  }
  if (name.rfind("mixture-", 0) == 0) {
    family = AuxiliaryFamily::kGaussianMixture;
    try {
      components = std::stoi(name.substr(8));
    } catch (const std::exception&) {
      throw UsageError("config: bad mixture family '" + name + "'");
    }
    if (components < 1) throw UsageError("config: mixture family needs >= 1 component");
    return;
  }
  throw UsageError("config: unknown family '" + name + "'");
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["j"] = c.target_count;
  j["n_max"] = c.n_max;
  j["n_step"] = c.n_step;
  j["n_initial"] = c.n_initial;
  j["n_rep"] = c.n_rep;
  j["seed"] = c.seed;
  j["h0"] = h0_mode_name(c.h0_mode);
  j["family"] = family_name(c.family, c.mixture_components);
  j["weights"] = weight_mode_name(c.weight_mode);
  j["out"] = c.out_dir;
  j["references"] = c.references_path;
  if (!c.base_density_json.empty()) j["base_density"] = json::parse(c.base_density_json);
  j["threads"] = c.threads;
  return j;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(const std::string& experiment_name) {
  ExperimentConfig c;
  c.experiment = experiment_name;
  c.n_max = 20000;
  c.n_step = 2000;
  c.n_initial = 2000;
  c.n_rep = 200;
  c.seed = 20230915;
  c.h0_mode = InitialMixture::kUniform;
  c.family = AuxiliaryFamily::kGaussian;
  if (experiment_name == "moments") {
    c.target_count = 10;
    c.weight_mode = WeightMode::kInverseSquareTarget;
    c.out_dir = "results/moments";
  } else if (experiment_name == "sobol-cantilever") {
    c.target_count = 8;  // derived: d + 2
    c.weight_mode = WeightMode::kUnit;
    c.out_dir = "results/sobol-cantilever";
  } else if (experiment_name == "param-sensitivity") {
    c.target_count = 100;
    c.weight_mode = WeightMode::kUnit;
    c.out_dir = "results/param-sensitivity";
  } else {
    throw UsageError("config: unknown experiment '" + experiment_name + "'");
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.contains("experiment") || !j["experiment"].is_string()) {
    throw UsageError("config: missing 'experiment' name");
  }
  ExperimentConfig c = defaults(j["experiment"].get<std::string>());
  try {
    if (j.contains("j")) c.target_count = j["j"].get<int>();
    if (j.contains("n_max")) c.n_max = j["n_max"].get<std::int64_t>();
    if (j.contains("n_step")) c.n_step = j["n_step"].get<std::int64_t>();
    c.n_initial = j.contains("n_initial") ? j["n_initial"].get<std::int64_t>() : c.n_step;
    if (j.contains("n_rep")) c.n_rep = j["n_rep"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("h0")) c.h0_mode = h0_mode_from_name(j["h0"].get<std::string>());
    if (j.contains("family")) {
      family_from_name(j["family"].get<std::string>(), c.family, c.mixture_components);
    }
    if (j.contains("weights")) c.weight_mode = weight_mode_from_name(j["weights"].get<std::string>());
    if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
    if (j.contains("references")) c.references_path = j["references"].get<std::string>();
    if (j.contains("base_density") && !j["base_density"].is_null()) {
      c.base_density_json = j["base_density"].dump();  // canonical text
      (void)density_from_spec_text(c.base_density_json);
    }
    if (j.contains("threads")) c.threads = j["threads"].get<int>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: bad field type: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config: cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string ExperimentConfig::to_json_text() const {
  return config_to_json(*this).dump(2) + "\n";
}

std::string ExperimentConfig::hash() const {
  json j = config_to_json(*this);
  j.erase("out");
  j.erase("threads");
  j.erase("references");
  const std::string canonical = j.dump();
  const std::uint64_t h = detail::fnv1a64(canonical);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

BudgetSchedule ExperimentConfig::schedule() const {
  BudgetSchedule s;
  s.n_max = n_max;
  s.n_initial = n_initial > 0 ? n_initial : n_step;
  s.n_step = n_step;
  return s;
}

AdaptiveOptions ExperimentConfig::adaptive_options() const {
  AdaptiveOptions o;
  o.h0_mode = h0_mode;
  o.family = family;
  o.mixture_components = mixture_components;
  return o;
}

void ExperimentConfig::validate() const {
  if (experiment != "moments" && experiment != "sobol-cantilever" &&
      experiment != "param-sensitivity") {
    throw UsageError("config: unknown experiment '" + experiment + "'");
  }
  if (n_rep < 1) throw UsageError("config: n_rep must be >= 1");
  if (target_count < 2) throw UsageError("config: j must be >= 2");
  schedule().validate();
  if (weight_mode == WeightMode::kInverseSquareTarget && experiment != "moments") {
    throw UsageError("config: inverse-square-target weights need analytic targets (moments only)");
  }
}

std::filesystem::path ExperimentConfig::resolved_references_path() const {
  if (!references_path.empty()) return references_path;
  return std::filesystem::path("references") / (experiment + ".csv");
}

namespace {

struct ReplicationResult {
  Eigen::VectorXd estimates;
  std::uint64_t model_calls = 0;
  int stop_iteration = -1;
  std::int64_t clamped = 0;
  std::vector<IterationRecord> trace;
};

using MethodRunner = std::function<ReplicationResult(std::int64_t rep, RngStream rng)>;

MethodResults run_method(const std::string& name, const ExperimentConfig& config,
                         int table_targets, std::uint64_t expected_calls,
                         const RngStream& root, const MethodRunner& runner) {
  MethodResults out;
  out.method = name;
  out.expected_model_calls = expected_calls;
  out.estimates.resize(config.n_rep, table_targets);
  out.model_calls.assign(static_cast<std::size_t>(config.n_rep), 0);
  out.stop_iterations.assign(static_cast<std::size_t>(config.n_rep), -1);
  std::vector<std::int64_t> clamped(static_cast<std::size_t>(config.n_rep), 0);

  const RngStream method_root = root.fork(name);
  parallel_for(
      config.n_rep,
      [&](std::int64_t r) {
        const ReplicationResult res =
            runner(r, method_root.fork("rep", static_cast<std::uint64_t>(r)));
        if (res.estimates.size() != static_cast<Eigen::Index>(table_targets)) {
          throw NumericalError(name + ": replication produced a wrong-sized estimate vector");
        }
        out.estimates.row(r) = res.estimates.transpose();
        out.model_calls[static_cast<std::size_t>(r)] = res.model_calls;
        out.stop_iterations[static_cast<std::size_t>(r)] = res.stop_iteration;
        if (r == 0) out.first_trace = res.trace;
        clamped[static_cast<std::size_t>(r)] = res.clamped;
        if (res.model_calls != expected_calls) {
          throw NumericalError(name + ": replication " + std::to_string(r) + " consumed " +
                               std::to_string(res.model_calls) + " model calls, expected " +
                               std::to_string(expected_calls));
        }
      },
      config.threads);

  for (std::int64_t c : clamped) out.clamped_estimates += c;
  if (!out.stop_iterations.empty() && out.stop_iterations.front() < 0) {
    out.stop_iterations.clear();  // baselines have no adaptation loop
  }
  return out;
}

void aggregate(MethodResults& method, const Eigen::VectorXd& weights) {
  const Eigen::Index n_rep = method.estimates.rows();
  if (n_rep < 2) {
    method.criterion = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  const Eigen::Index targets = method.estimates.cols();
  method.per_target_variance.resize(targets);
  for (Eigen::Index t = 0; t < targets; ++t) {
    const Eigen::VectorXd col = method.estimates.col(t);
    const double mean = col.mean();
    method.per_target_variance[t] =
        (col.array() - mean).square().sum() / static_cast<double>(n_rep - 1);
  }
  method.criterion = weights.dot(method.per_target_variance);
}

DensityPtr sobol_base_density(const ExperimentConfig& config) {
  if (config.base_density_json.empty()) {
    return cantilever_input_density(sobol_reference_parameters());
  }
  DensityPtr base = density_from_spec_text(config.base_density_json);
  if (base->dim() != 6) {
    throw UsageError("config: the cantilever model takes 6 inputs, base_density has dimension " +
                     std::to_string(base->dim()));
  }
  return base;
}

Eigen::VectorXd estimates_to_vector(const std::vector<CvEstimate>& estimates) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(estimates.size()));
  for (std::size_t j = 0; j < estimates.size(); ++j) {
    out[static_cast<Eigen::Index>(j)] = estimates[j].value;
  }
  return out;
}

}  // namespace

DensityPtr density_from_spec_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("density spec: invalid JSON: ") + e.what());
  }
  DistributionSpec spec;
  try {
    if (!j.contains("marginals") || !j["marginals"].is_array()) {
      throw UsageError("density spec: missing 'marginals' array");
    }
    for (const json& m : j["marginals"]) {
      spec.marginals.push_back(MarginalSpec{
          marginal_family_from_name(m.at("family").get<std::string>()),
          m.at("mean").get<double>(), m.at("cv").get<double>()});
    }
    if (j.contains("correlations")) {
      for (const json& e : j["correlations"]) {
        if (!e.is_array() || e.size() != 3) {
          throw UsageError("density spec: correlation entries are [i, j, rho] triples");
        }
        spec.correlations.push_back(
            CorrelationEntry{e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
      }
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("density spec: bad field: ") + e.what());
  }
  return make_density(spec);
}

ResultTable run_experiment(const ExperimentConfig& config) {
  config.validate();
  const RngStream root(config.seed);
  const BudgetSchedule schedule = config.schedule();
  const AdaptiveOptions options = config.adaptive_options();

  ResultTable table;
  table.config = config;

  if (config.experiment == "moments") {
    const MomentsProblem prototype =
        moments_problem(config.target_count, config.weight_mode == WeightMode::kUnit);
    const int table_targets = config.target_count;
    table.criterion_weights = prototype.problem.weights();
    table.reference = prototype.reference;

    table.methods.push_back(run_method(
        "mc", config, table_targets, static_cast<std::uint64_t>(config.n_max), root,
        [&](std::int64_t, RngStream rng) {
          const EstimationProblem problem = prototype.problem.with_fresh_counter();
          ReplicationResult res;
          res.estimates = estimates_to_vector(mc_mixture_baseline(problem, config.n_max, rng));
          res.model_calls = problem.model_calls();
          return res;
        }));
    table.methods.push_back(run_method(
        "me-aiscv", config, table_targets, static_cast<std::uint64_t>(config.n_max), root,
        [&](std::int64_t, RngStream rng) {
          const EstimationProblem problem = prototype.problem.with_fresh_counter();
          const RunReport report = AdaptiveRun::run(problem, schedule, options, rng.seed());
          ReplicationResult res;
          res.estimates = estimates_to_vector(report.estimates);
          res.model_calls = report.model_calls;
          res.stop_iteration = report.iterations;
          res.trace = report.trace;
          return res;
        }));
  } else if (config.experiment == "sobol-cantilever") {
    const SobolProblem prototype = build_sobol_problem(
        [](const Eigen::VectorXd& x) { return cantilever_phi(x); }, sobol_base_density(config));
    const int d = prototype.base_dim;
    const int table_targets = d;
    table.criterion_weights = Eigen::VectorXd::Ones(d);
    const std::uint64_t expected =
        static_cast<std::uint64_t>(config.n_max) * static_cast<std::uint64_t>(d + 1);

    const auto sobol_replication = [&](RngStream rng, bool adaptive) {
      const EstimationProblem problem = prototype.problem.with_fresh_counter();
      ReplicationResult res;
      Eigen::VectorXd expectations;
      if (adaptive) {
        const RunReport report = AdaptiveRun::run(problem, schedule, options, rng.seed());
        expectations = estimates_to_vector(report.estimates);
        res.stop_iteration = report.iterations;
        res.trace = report.trace;
      } else {
        expectations = estimates_to_vector(mc_mixture_baseline(problem, config.n_max, rng));
      }
      const SobolIndices indices = sobol_from_expectations(expectations);
      res.estimates = indices.values;
      for (bool c : indices.clamped) res.clamped += c ? 1 : 0;
      res.model_calls = problem.model_calls();
      return res;
    };

    table.methods.push_back(run_method(
        "pick-freeze", config, table_targets, expected, root,
        [&](std::int64_t, RngStream rng) { return sobol_replication(rng, false); }));
    table.methods.push_back(run_method(
        "me-aiscv", config, table_targets, expected, root,
        [&](std::int64_t, RngStream rng) { return sobol_replication(rng, true); }));
  } else {  // param-sensitivity
    RngStream problem_rng = root.fork("problem");
    const ParamSensitivityProblem prototype =
        build_param_sensitivity_problem(config.target_count, problem_rng);
    table.problem_redraws = prototype.redraws;
    const int table_targets = config.target_count;
    table.criterion_weights = Eigen::VectorXd::Ones(table_targets);
    const std::int64_t per_target = config.n_max / config.target_count;
    const std::uint64_t nmc_expected =
        static_cast<std::uint64_t>(per_target) * static_cast<std::uint64_t>(config.target_count);

    table.methods.push_back(run_method(
        "nmc", config, table_targets, nmc_expected, root, [&](std::int64_t, RngStream rng) {
          const EstimationProblem problem = prototype.problem.with_fresh_counter();
          ReplicationResult res;
          res.estimates = estimates_to_vector(naive_mc_baseline(problem, config.n_max, rng));
          res.model_calls = problem.model_calls();
          return res;
        }));
    table.methods.push_back(run_method(
        "mc-mixture", config, table_targets, static_cast<std::uint64_t>(config.n_max), root,
        [&](std::int64_t, RngStream rng) {
          const EstimationProblem problem = prototype.problem.with_fresh_counter();
          ReplicationResult res;
          res.estimates = estimates_to_vector(mc_mixture_baseline(problem, config.n_max, rng));
          res.model_calls = problem.model_calls();
          return res;
        }));
    table.methods.push_back(run_method(
        "me-aiscv", config, table_targets, static_cast<std::uint64_t>(config.n_max), root,
        [&](std::int64_t, RngStream rng) {
          const EstimationProblem problem = prototype.problem.with_fresh_counter();
          const RunReport report = AdaptiveRun::run(problem, schedule, options, rng.seed());
          ReplicationResult res;
          res.estimates = estimates_to_vector(report.estimates);
          res.model_calls = report.model_calls;
          res.stop_iteration = report.iterations;
          res.trace = report.trace;
          return res;
        }));
  }

  for (MethodResults& m : table.methods) aggregate(m, table.criterion_weights);

  if (table.reference.size() == 0) {
    if (const auto refs = load_references(config.resolved_references_path())) {
      if (refs->size() == table.methods.front().estimates.cols()) {
        table.reference = *refs;
      } else {
        throw UsageError("references: file has " + std::to_string(refs->size()) +
                         " values, expected " +
                         std::to_string(table.methods.front().estimates.cols()));
      }
    }
  }
  return table;
}

void emit_boxplot_data(const ResultTable& table, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw NumericalError("cannot write " + file.string());
  out << "method,target_index,replication,estimate\n";
  for (const MethodResults& m : table.methods) {
    for (Eigen::Index t = 0; t < m.estimates.cols(); ++t) {
      for (Eigen::Index r = 0; r < m.estimates.rows(); ++r) {
        out << m.method << ',' << t + 1 << ',' << r << ',' << format_double(m.estimates(r, t))
            << '\n';
      }
    }
  }
  for (Eigen::Index t = 0; t < table.reference.size(); ++t) {
    out << "reference," << t + 1 << ",-1," << format_double(table.reference[t]) << '\n';
  }
  if (!out) throw NumericalError("write failed for " + file.string());
}

std::filesystem::path result_directory(const ExperimentConfig& config) {
  return std::filesystem::path(config.out_dir) / config.hash();
}

void write_result_table(const ResultTable& table, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  emit_boxplot_data(table, dir / "boxplot.csv");

  {
    std::ofstream out(dir / "variances.csv", std::ios::binary);
    out << "method,target_index,replication_variance\n";
    for (const MethodResults& m : table.methods) {
      for (Eigen::Index t = 0; t < m.per_target_variance.size(); ++t) {
        out << m.method << ',' << t + 1 << ',' << format_double(m.per_target_variance[t])
            << '\n';
      }
    }
  }
  {
    std::ofstream out(dir / "criterion.csv", std::ios::binary);
    out << "method,criterion,n_rep\n";
    for (const MethodResults& m : table.methods) {
      out << m.method << ',' << format_double(m.criterion) << ',' << table.config.n_rep << '\n';
    }
  }
  {
    // Adaptation trace of the first replication: one record per iteration
    // and target.
    std::ofstream out(dir / "trace.csv", std::ios::binary);
    out << "method,k,target_index,alpha,beta,lambda_mean_norm,lambda_cov_trace,"
           "criterion,criterion_per_budget\n";
    for (const MethodResults& m : table.methods) {
      for (const IterationRecord& rec : m.first_trace) {
        for (Eigen::Index j = 0; j < rec.alpha.size(); ++j) {
          out << m.method << ',' << rec.k << ',' << j + 1 << ','
              << format_double(rec.alpha[j]) << ',' << format_double(rec.beta[j]) << ','
              << format_double(rec.lambda[static_cast<std::size_t>(j)].mean.norm()) << ','
              << format_double(rec.lambda[static_cast<std::size_t>(j)].cov_trace) << ','
              << format_double(rec.criterion) << ','
              << format_double(rec.criterion_per_budget) << '\n';
        }
      }
    }
  }
  {
    json j;
    j["config"] = json::parse(table.config.to_json_text());
    j["config_hash"] = table.config.hash();
    json criteria;
    json audit;
    json histogram;
    json clamped;
    for (const MethodResults& m : table.methods) {
      criteria[m.method] = std::isnan(m.criterion) ? json(nullptr) : json(m.criterion);
      json a;
      a["expected"] = m.expected_model_calls;
      a["exact"] = true;  // run_experiment enforces equality per replication
      audit[m.method] = a;
      if (!m.stop_iterations.empty()) {
        std::map<int, int> counts;
        for (int it : m.stop_iterations) ++counts[it];
        json h;
        for (const auto& [iter, count] : counts) h[std::to_string(iter)] = count;
        histogram[m.method] = h;
      }
      if (m.clamped_estimates > 0) clamped[m.method] = m.clamped_estimates;
    }
    j["criterion"] = criteria;
    j["model_call_audit"] = audit;
    j["stop_iteration_histogram"] = histogram;
    if (!clamped.empty()) j["clamped_estimates"] = clamped;
    if (table.problem_redraws > 0) j["problem_redraws"] = table.problem_redraws;
    j["references_available"] = table.reference.size() > 0;
    std::ofstream out(dir / "summary.json", std::ios::binary);
    out << j.dump(2) << '\n';
  }
}

Eigen::VectorXd make_references(const ExperimentConfig& config, std::int64_t n_per_target) {
  config.validate();
  if (n_per_target < 2) throw UsageError("make_references: n_per_target must be >= 2");
  const RngStream root(config.seed);

  if (config.experiment == "moments") {
    return moments_problem(config.target_count).reference;
  }
  if (config.experiment == "sobol-cantilever") {
    const SobolProblem prototype = build_sobol_problem(
        [](const Eigen::VectorXd& x) { return cantilever_phi(x); }, sobol_base_density(config));
    RngStream rng = root.fork("references");
    const std::vector<CvEstimate> estimates =
        mc_mixture_baseline(prototype.problem.with_fresh_counter(), n_per_target, rng);
    return sobol_from_expectations(estimates_to_vector(estimates)).values;
  }

  // param-sensitivity: one crude Monte Carlo mean per input distribution.
  RngStream problem_rng = root.fork("problem");
  const ParamSensitivityProblem prototype =
      build_param_sensitivity_problem(config.target_count, problem_rng);
  const RngStream ref_root = root.fork("references");
  Eigen::VectorXd out(config.target_count);
  parallel_for(
      config.target_count,
      [&](std::int64_t j) {
        RngStream rng = ref_root.fork("target", static_cast<std::uint64_t>(j));
        const EstimationProblem problem = prototype.problem.with_fresh_counter();
        const Eigen::MatrixXd pts =
            problem.input_density(static_cast<int>(j)).sample(static_cast<int>(n_per_target), rng);
        const Eigen::VectorXd values = problem.targets().evaluate_one(static_cast<int>(j), pts);
        out[j] = values.mean();
      },
      config.threads);
  return out;
}

void write_references(const Eigen::VectorXd& values, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericalError("cannot write " + path.string());
  out << "target_index,value\n";
  for (Eigen::Index t = 0; t < values.size(); ++t) {
    out << t + 1 << ',' << format_double(values[t]) << '\n';
  }
}

std::optional<Eigen::VectorXd> load_references(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw UsageError("references: malformed line '" + line + "'");
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) out[static_cast<Eigen::Index>(i)] = values[i];
  return out;
}

std::string render_report(const std::filesystem::path& dir) {
  std::ifstream in(dir / "summary.json");
  if (!in) throw UsageError("report: no summary.json under " + dir.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError(std::string("report: malformed summary.json: ") + e.what());
  }
  std::ostringstream out;
  out << "experiment: " << j["config"]["experiment"].get<std::string>() << "\n";
  out << "config hash: " << j["config_hash"].get<std::string>() << "\n";
  out << "criterion (weighted sum of replication variances):\n";
  for (const auto& [method, value] : j["criterion"].items()) {
    out << "  " << method << ": ";
    if (value.is_null()) {
      out << "unavailable (needs >= 2 replications)";
    } else {
      out << format_double(value.get<double>());
    }
    out << "\n";
  }
  if (j.contains("stop_iteration_histogram")) {
    for (const auto& [method, hist] : j["stop_iteration_histogram"].items()) {
      out << "stop iterations (" << method << "):";
      for (const auto& [iter, count] : hist.items()) {
        out << " k=" << iter << " x" << count.get<int>();
      }
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace meiscv
