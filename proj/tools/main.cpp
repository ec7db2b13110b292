#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "meiscv/errors.hpp"
#include "meiscv/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericalError = 3;

struct Overrides {
  std::int64_t seed = -1;
  int n_rep = -1;
  std::int64_t n_max = -1;
  std::string out;
  int threads = -1;
};

void apply(const Overrides& o, meiscv::ExperimentConfig& config) {
  if (o.seed >= 0) config.seed = static_cast<std::uint64_t>(o.seed);
  if (o.n_rep >= 0) config.n_rep = o.n_rep;
  if (o.n_max >= 0) config.n_max = o.n_max;
  if (!o.out.empty()) config.out_dir = o.out;
  if (o.threads >= 0) config.threads = o.threads;
  config.validate();
}

int run_command(const std::string& config_path, const Overrides& overrides) {
  meiscv::ExperimentConfig config = meiscv::ExperimentConfig::from_file(config_path);
  apply(overrides, config);

  const auto start = std::chrono::steady_clock::now();
  const meiscv::ResultTable table = meiscv::run_experiment(config);
  const auto dir = meiscv::result_directory(config);
  meiscv::write_result_table(table, dir);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

  std::cout << "wrote " << dir.string() << " (" << elapsed.count() << " s)\n";
  for (const auto& m : table.methods) {
    std::cout << "  " << m.method << " criterion: " << m.criterion << "\n";
  }
  return kExitOk;
}

int make_references_command(const std::string& experiment, const Overrides& overrides,
                            std::int64_t n_per_target) {
  meiscv::ExperimentConfig config = meiscv::ExperimentConfig::defaults(experiment);
  apply(overrides, config);
  const Eigen::VectorXd values = meiscv::make_references(config, n_per_target);
  std::filesystem::path path = config.resolved_references_path();
  if (!overrides.out.empty()) path = overrides.out;
  meiscv::write_references(values, path);
  std::cout << "wrote " << path.string() << " (" << values.size() << " reference values, seed "
            << config.seed << ")\n";
  return kExitOk;
}

int report_command(const std::string& results_dir) {
  std::cout << meiscv::render_report(results_dir);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint estimation of multiple expectations from one shared sample by "
               "adaptive importance sampling with control variates"};
  app.require_subcommand(1);

  Overrides overrides;
  std::string config_path;
  std::string experiment;
  std::string results_dir;
  std::int64_t n_per_target = 1000000;

  auto add_overrides = [&](CLI::App* cmd) {
    cmd->add_option("--seed", overrides.seed, "Root seed override");
    cmd->add_option("--n-rep", overrides.n_rep, "Replication count override");
    cmd->add_option("--n-max", overrides.n_max, "Model-call budget override");
    cmd->add_option("--out", overrides.out, "Output location override");
    cmd->add_option("--threads", overrides.threads, "Worker thread count (0 = hardware)");
  };

  CLI::App* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "Path to the experiment config (JSON)")->required();
  add_overrides(run);

  CLI::App* refs = app.add_subcommand(
      "make-references", "Compute and cache reference values for an experiment");
  refs->add_option("experiment", experiment,
                   "Experiment name: moments | sobol-cantilever | param-sensitivity")
      ->required();
  refs->add_option("--n-per-target", n_per_target, "Sample size per reference value");
  add_overrides(refs);

  CLI::App* report = app.add_subcommand("report", "Summarize a written results directory");
  report->add_option("results", results_dir, "Results directory (out/<hash>)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (run->parsed()) return run_command(config_path, overrides);
    if (refs->parsed()) return make_references_command(experiment, overrides, n_per_target);
    return report_command(results_dir);
  } catch (const meiscv::UsageError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const meiscv::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericalError;
  }
}
