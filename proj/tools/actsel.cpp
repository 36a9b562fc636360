#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "actsel/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Activation sparsity and selectivity experiments on MNIST"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log every epoch");

  actsel::RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config or named preset");
  run_cmd->add_option("config", run.config, "Config file or preset name")->required();
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_option("--seeds", run.seeds, "Number of seeds (indices 0..N-1)");
  run_cmd->add_option("--subsample", run.subsample, "Stratified training subsample size");
  run_cmd->add_option("--epochs", run.epochs, "Epochs per trial");
  run_cmd->add_option("--threads", run.threads, "Concurrent trials (0 = all cores)");
  run_cmd->add_option("--data-dir", run.data_dir, "MNIST directory (default $ACTSEL_DATA_DIR)");

  actsel::ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Summarise results and check trend assertions");
  report_cmd->add_option("results", report.results, "Run directories or epochs CSV files")->required();
  report_cmd->add_option("--asserts", report.asserts, "JSON file of trend assertions");
  report_cmd->add_option("--products", report.products, "Write accuracy x metric products CSV here");

  std::optional<std::filesystem::path> data_dir;
  auto* data_cmd = app.add_subcommand("data", "Download or verify MNIST");
  data_cmd->require_subcommand(1);
  auto* fetch_cmd = data_cmd->add_subcommand("fetch", "Download the four IDX files");
  auto* verify_cmd = data_cmd->add_subcommand("verify", "Check magic numbers, sizes and checksums");
  for (auto* c : {fetch_cmd, verify_cmd}) c->add_option("--dir", data_dir, "MNIST directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : actsel::kExitConfig;
  }
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  if (*run_cmd) return actsel::cmd_run(run, std::cout, std::cerr);
  if (*report_cmd) return actsel::cmd_report(report, std::cout, std::cerr);
  const auto dir = actsel::resolve_data_dir(data_dir);
  if (*fetch_cmd) return actsel::cmd_data_fetch(dir, std::cout, std::cerr);
  return actsel::cmd_data_verify(dir, std::cout, std::cerr);
}
