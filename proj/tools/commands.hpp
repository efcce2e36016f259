#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fixquant/quantizer.hpp"

namespace fixquant::cli {

// Options shared by the subcommands; each command reads the subset it needs.
struct RunConfig {
  std::filesystem::path model_path;
  std::vector<std::filesystem::path> calib_paths;
  std::filesystem::path out_dir = ".";

  Distribution dist = Distribution::Gaussian;
  double xi_mult = 3.0;
  double kappa = 3.0;
  double min_sqnr_db = 20.0;
  int fc_bits = 16;
  int act_bits_pinned = 16;
  int input_bits = 0;  // 0 disables input quantization
  int min_bits = 2;
  int max_bits = 16;
  std::uint64_t seed = 1;

  // quantize
  std::filesystem::path allocation_path;
  std::string policy = "waterfill";  // or "equal"
  int uniform_bits = 0;              // overrides the allocation when > 0

  // simulate
  std::filesystem::path plan_path;

  // sweep
  double sweep_min_db = 2.0;
  double sweep_max_db = 40.0;
  double sweep_step_db = 2.0;

  // make-fixture
  std::string fixture_name = "cifar10";
  int calib_batches = 1;
  int batch_size = 4;
};

int cmd_stats(const RunConfig& config);
int cmd_allocate(const RunConfig& config);
int cmd_quantize(const RunConfig& config);
int cmd_simulate(const RunConfig& config);
int cmd_sweep(const RunConfig& config);
int cmd_make_fixture(const RunConfig& config);

// Exit status classes: 0 success, 2 input error, 3 infeasible, 4 internal.
int exit_code_for(const Error& error) noexcept;

}  // namespace fixquant::cli
