#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "meiscv/adaptive.hpp"

namespace meiscv {

enum class WeightMode { kUnit, kInverseSquareTarget };

// Declarative description of one benchmark run: which experiment, problem
// size, budget schedule, replication count and seeding.
struct ExperimentConfig {
  std::string experiment;  // moments | sobol-cantilever | param-sensitivity
  int target_count = 0;
  std::int64_t n_max = 0;
  std::int64_t n_step = 0;
  std::int64_t n_initial = 0;
  int n_rep = 0;
  std::uint64_t seed = 0;
  InitialMixture h0_mode = InitialMixture::kUniform;
  AuxiliaryFamily family = AuxiliaryFamily::kGaussian;
  int mixture_components = 2;
  WeightMode weight_mode = WeightMode::kUnit;
  std::string out_dir;
  std::string references_path;  // empty: references/<experiment>.csv
  // Declarative base input density for the Sobol' experiment (canonical JSON
  // text; empty selects the built-in cantilever density).
  std::string base_density_json;
  int threads = 0;              // 0: hardware concurrency

  static ExperimentConfig defaults(const std::string& experiment_name);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  static ExperimentConfig from_json_text(const std::string& text);
  std::string to_json_text() const;

  // Hash of the result-relevant fields (out_dir and threads excluded); names
  // the output subdirectory so a changed config never overwrites silently.
  std::string hash() const;

  BudgetSchedule schedule() const;
  AdaptiveOptions adaptive_options() const;
  void validate() const;
  std::filesystem::path resolved_references_path() const;
};

struct MethodResults {
  std::string method;
  Eigen::MatrixXd estimates;  // n_rep x T table estimates
  std::vector<std::uint64_t> model_calls;
  std::uint64_t expected_model_calls = 0;
  std::vector<int> stop_iterations;      // adaptive runs only
  std::vector<IterationRecord> first_trace;  // adaptation trace of replication 0
  Eigen::VectorXd per_target_variance;   // across replications; empty when n_rep < 2
  double criterion = 0.0;                // NaN when n_rep < 2
  std::int64_t clamped_estimates = 0;    // Sobol' values clamped to [-0.1, 1.1]
};

struct ResultTable {
  ExperimentConfig config;
  Eigen::VectorXd criterion_weights;  // per table target
  std::vector<MethodResults> methods;
  Eigen::VectorXd reference;  // empty when no reference values are available
  std::int64_t problem_redraws = 0;  // param-sensitivity LHS rows redrawn
};

// Runs n_rep seeded replications of the adaptive estimator and the
// experiment's baselines, each consuming its exact model-call budget.
ResultTable run_experiment(const ExperimentConfig& config);

// boxplot.csv: (method, target_index, replication, estimate) rows plus one
// reference row per target when references are available.
void emit_boxplot_data(const ResultTable& table, const std::filesystem::path& file);

// Writes boxplot.csv, variances.csv, criterion.csv, trace.csv and
// summary.json under dir. All outputs are byte-deterministic for a fixed
// (config, seed).
void write_result_table(const ResultTable& table, const std::filesystem::path& dir);

// Parses a declarative density record ({"marginals": [{family, mean, cv}...],
// "correlations": [[i, j, rho]...]}) into a density.
DensityPtr density_from_spec_text(const std::string& json_text);

// Output directory for this config: out_dir/<config hash>.
std::filesystem::path result_directory(const ExperimentConfig& config);

// Reference values per table target: analytic for the moments experiment,
// crude Monte Carlo / standard Pick-Freeze at n_per_target points otherwise.
Eigen::VectorXd make_references(const ExperimentConfig& config, std::int64_t n_per_target);

void write_references(const Eigen::VectorXd& values, const std::filesystem::path& path);
std::optional<Eigen::VectorXd> load_references(const std::filesystem::path& path);

// Human-readable summary of a written results directory.
std::string render_report(const std::filesystem::path& dir);

}  // namespace meiscv
