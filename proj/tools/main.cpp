#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

using fixquant::cli::RunConfig;

int main(int argc, char** argv) {
  CLI::App app{"fixquant: fixed-point conversion and bit-width planning for "
               "convolutional networks"};
  app.require_subcommand(1);

  RunConfig config;
  std::string dist_name = "gaussian";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--model", config.model_path, "model manifest (JSON)");
    cmd->add_option("--calib", config.calib_paths,
                    "calibration input blobs (float32, input-shaped)");
    cmd->add_option("--out", config.out_dir, "output directory");
    cmd->add_option("--dist", dist_name,
                    "distribution family: uniform|gaussian|laplacian|gamma");
    cmd->add_option("--xi-mult", config.xi_mult,
                    "effective-sigma multiplier (xi = mult * sigma)");
    cmd->add_option("--kappa", config.kappa, "quantization efficiency, dB/bit");
    cmd->add_option("--min-sqnr-db", config.min_sqnr_db,
                    "output SQNR target for allocation");
    cmd->add_option("--fc-bits", config.fc_bits,
                    "pinned bit-width for fully-connected layers");
    cmd->add_option("--act-bits-pinned", config.act_bits_pinned,
                    "pinned bit-width for activations");
    cmd->add_option("--input-bits", config.input_bits,
                    "quantize the network input at this width (0 = off)");
    cmd->add_option("--min-bits", config.min_bits, "lower bit-width bound");
    cmd->add_option("--max-bits", config.max_bits, "upper bit-width bound");
    cmd->add_option("--seed", config.seed, "seed for fixture generation");
  };

  auto* stats = app.add_subcommand("stats", "collect calibration statistics");
  add_common(stats);

  auto* allocate =
      app.add_subcommand("allocate", "solve the cross-layer bit allocation");
  add_common(allocate);

  auto* quantize =
      app.add_subcommand("quantize", "derive formats and convert the model");
  add_common(quantize);
  quantize->add_option("--allocation", config.allocation_path,
                       "allocation report (default <out>/allocation.csv)");
  quantize->add_option("--policy", config.policy, "waterfill|equal");
  quantize->add_option("--bits", config.uniform_bits,
                       "uniform bit-width override (skips the allocation)");

  auto* simulate =
      app.add_subcommand("simulate", "predicted vs measured per-layer SQNR");
  add_common(simulate);
  simulate->add_option("--plan", config.plan_path,
                       "plan file (default <out>/plan.txt)");

  auto* sweep =
      app.add_subcommand("sweep", "cost/SQNR trade-off across targets");
  add_common(sweep);
  sweep->add_option("--sweep-min-db", config.sweep_min_db, "first target");
  sweep->add_option("--sweep-max-db", config.sweep_max_db, "last target");
  sweep->add_option("--sweep-step-db", config.sweep_step_db, "target spacing");

  auto* fixture =
      app.add_subcommand("make-fixture", "fabricate a seeded test network");
  add_common(fixture);
  fixture->add_option("--name", config.fixture_name,
                      "identity|cifar10|alexnet|chain5|chain5-relu");
  fixture->add_option("--calib-batches", config.calib_batches,
                      "number of calibration blobs to emit");
  fixture->add_option("--batch-size", config.batch_size,
                      "samples per calibration blob");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    config.dist = fixquant::distribution_from_name(dist_name);
    if (stats->parsed()) return fixquant::cli::cmd_stats(config);
    if (allocate->parsed()) return fixquant::cli::cmd_allocate(config);
    if (quantize->parsed()) return fixquant::cli::cmd_quantize(config);
    if (simulate->parsed()) return fixquant::cli::cmd_simulate(config);
    if (sweep->parsed()) return fixquant::cli::cmd_sweep(config);
    if (fixture->parsed()) return fixquant::cli::cmd_make_fixture(config);
  } catch (const fixquant::Error& e) {
    std::cerr << "error (" << fixquant::errc_name(e.code()) << "): " << e.what()
              << "\n";
    return fixquant::cli::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
