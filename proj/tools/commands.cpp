#include "commands.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>

#include "fixquant/allocator.hpp"
#include "fixquant/engine.hpp"
#include "fixquant/fixture.hpp"
#include "fixquant/net_ir.hpp"
#include "fixquant/report.hpp"

namespace fs = std::filesystem;

namespace fixquant::cli {

namespace {

Model load_prepared_model(const RunConfig& config) {
  Model model = load_model(config.model_path);
  // Batch norm is a fixed affine transform at inference time; fold it away
  // so the quantization steps see the effective weights.
  const bool has_bn = std::any_of(
      model.layers.begin(), model.layers.end(),
      [](const LayerSpec& l) { return l.kind == LayerKind::BatchNorm; });
  return has_bn ? fold_batchnorm(model) : model;
}

std::vector<Tensor> load_calibration(const RunConfig& config,
                                     const Model& model) {
  if (config.calib_paths.empty()) {
    raise(errc::input, "no calibration inputs given (--calib)");
  }
  const std::int64_t sample_elems =
      std::accumulate(model.input_shape.begin(), model.input_shape.end(),
                      std::int64_t{1}, std::multiplies<std::int64_t>());
  std::vector<Tensor> batches;
  for (const auto& path : config.calib_paths) {
    const auto raw = read_blob(path);
    if (raw.empty() || raw.size() % static_cast<std::size_t>(sample_elems) != 0) {
      raise(errc::shape_mismatch,
            "calibration blob " + path.string() + " holds " +
                std::to_string(raw.size()) +
                " values, not a multiple of the input size " +
                std::to_string(sample_elems));
    }
    const auto batch = static_cast<std::int64_t>(raw.size()) / sample_elems;
    std::vector<std::int64_t> shape{batch};
    shape.insert(shape.end(), model.input_shape.begin(), model.input_shape.end());
    batches.push_back(
        Tensor{std::move(shape), std::vector<double>(raw.begin(), raw.end())});
  }
  return batches;
}

std::map<std::string, TensorStats> compute_stats(const RunConfig& config,
                                                 const Model& model) {
  const auto batches = load_calibration(config, model);
  return collect_stats(model, batches);
}

std::map<std::string, TensorStats> stats_for(const RunConfig& config,
                                             const Model& model) {
  const fs::path stats_path = config.out_dir / "stats.csv";
  if (fs::exists(stats_path) && config.calib_paths.empty()) {
    return report::read_stats_csv(stats_path);
  }
  auto stats = compute_stats(config, model);
  fs::create_directories(config.out_dir);
  report::write_stats_csv(stats_path, stats);
  return stats;
}

std::vector<std::string> quantizable_layers(const Model& model) {
  std::vector<std::string> names;
  for (const auto& layer : model.layers) {
    if (is_quantizable(layer.kind)) names.push_back(layer.name);
  }
  return names;
}

// Allocation problem for the model-size objective: one weight step per
// quantizable layer (fully-connected layers pinned at fc_bits, convolutional
// layers free) followed by its pinned activation step.
AllocationProblem build_problem(const RunConfig& config, const Model& model) {
  const auto counts = count_params(model);
  AllocationProblem problem;
  problem.kappa = config.kappa;
  problem.constraint = MinOutputSqnr{SqnrDb{config.min_sqnr_db}};
  if (config.input_bits > 0) {
    problem.steps.push_back(QuantStep{"a(0)", config.input_bits, config.kappa, 0.0});
    problem.bounds.push_back(StepBounds{config.input_bits, config.input_bits});
  }
  for (const auto& layer : model.layers) {
    if (!is_quantizable(layer.kind)) continue;
    const double rho = static_cast<double>(counts.at(layer.name));
    if (layer.kind == LayerKind::FullyConnected) {
      problem.steps.push_back(QuantStep{"w(" + layer.name + ")",
                                        config.fc_bits, config.kappa, rho});
      problem.bounds.push_back(StepBounds{config.fc_bits, config.fc_bits});
    } else {
      problem.steps.push_back(
          QuantStep{"w(" + layer.name + ")", config.max_bits, config.kappa, rho});
      problem.bounds.push_back(StepBounds{config.min_bits, config.max_bits});
    }
    problem.steps.push_back(QuantStep{"a(" + layer.name + ")",
                                      config.act_bits_pinned, config.kappa, 0.0});
    problem.bounds.push_back(
        StepBounds{config.act_bits_pinned, config.act_bits_pinned});
  }
  return problem;
}

report::AllocationReport make_report(const AllocationProblem& problem,
                                     const BitAllocation& optimized,
                                     const BitAllocation& equal) {
  report::AllocationReport rep;
  rep.kappa = problem.kappa;
  rep.optimized_total_bits = optimized.total_cost_bits;
  rep.optimized_sqnr = optimized.predicted_output;
  rep.equal_total_bits = equal.total_cost_bits;
  rep.equal_sqnr = equal.predicted_output;
  for (std::size_t i = 0; i < problem.steps.size(); ++i) {
    report::AllocationRow row;
    row.label = problem.steps[i].label;
    row.rho = problem.steps[i].rho;
    row.beta_continuous = optimized.continuous_bits[i];
    row.beta_integer = optimized.integer_bits[i];
    row.equal_beta = equal.integer_bits[i];
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

struct PlanBits {
  std::map<std::string, int> weight_bits;
  std::map<std::string, int> act_bits;
  int input_bits = 0;
};

PlanBits bits_from_report(const report::AllocationReport& rep,
                          const std::string& policy) {
  if (policy != "waterfill" && policy != "equal") {
    raise(errc::input, "unknown policy '" + policy + "'");
  }
  PlanBits bits;
  for (const auto& row : rep.rows) {
    const int b = policy == "equal" ? row.equal_beta : row.beta_integer;
    if (row.label == "a(0)") {
      bits.input_bits = b;
    } else if (row.label.starts_with("w(") && row.label.ends_with(")")) {
      bits.weight_bits[row.label.substr(2, row.label.size() - 3)] = b;
    } else if (row.label.starts_with("a(") && row.label.ends_with(")")) {
      bits.act_bits[row.label.substr(2, row.label.size() - 3)] = b;
    } else {
      raise(errc::parse, "bad step label '" + row.label + "' in allocation");
    }
  }
  return bits;
}

QuantizationPlan derive_plan(const RunConfig& config, const Model& model,
                             const std::map<std::string, TensorStats>& stats,
                             const PlanBits& bits) {
  QuantizationPlan plan;
  std::vector<std::string> degenerate;
  for (const auto& name : quantizable_layers(model)) {
    const auto wb = bits.weight_bits.find(name);
    const auto ab = bits.act_bits.find(name);
    if (wb == bits.weight_bits.end() || ab == bits.act_bits.end()) {
      raise(errc::plan_coverage, "allocation has no steps for layer '" + name + "'");
    }
    try {
      plan.weight_formats[name] = derive_qformat(
          stats.at(name + ".weight"), wb->second, config.dist, config.xi_mult);
    } catch (const Error& e) {
      if (e.code() != errc::degenerate_stats) throw;
      degenerate.push_back(name + ".weight");
    }
    try {
      plan.activation_formats[name] = derive_qformat(
          stats.at(name + ".act"), ab->second, config.dist, config.xi_mult);
    } catch (const Error& e) {
      if (e.code() != errc::degenerate_stats) throw;
      degenerate.push_back(name + ".act");
    }
  }
  if (bits.input_bits > 0) {
    plan.input_format = derive_qformat(stats.at("input"), bits.input_bits,
                                       config.dist, config.xi_mult);
  }
  if (!degenerate.empty()) {
    std::string names;
    for (const auto& n : degenerate) names += " " + n;
    raise(errc::degenerate_stats, "degenerate statistics for:" + names);
  }
  return plan;
}

std::vector<report::SqnrReportRow> simulate_rows(const RunConfig& config,
                                                 const Model& model,
                                                 const QuantizationPlan& plan,
                                                 const Tensor& batch) {
  std::optional<QuantStep> input_step;
  if (plan.input_format) {
    input_step = QuantStep{"a(0)", plan.input_format->bitwidth, config.kappa, 0.0};
  }
  std::vector<LayerSteps> layer_steps;
  for (const auto& name : quantizable_layers(model)) {
    LayerSteps group;
    group.layer = name;
    group.steps.push_back(QuantStep{
        "w(" + name + ")", plan.weight_formats.at(name).bitwidth, config.kappa, 0.0});
    group.steps.push_back(QuantStep{
        "a(" + name + ")", plan.activation_formats.at(name).bitwidth, config.kappa, 0.0});
    layer_steps.push_back(std::move(group));
  }
  const SqnrPrediction prediction = predict_network_sqnr(input_step, layer_steps);
  const auto measured = measure_layer_sqnr(model, batch, plan);

  std::vector<report::SqnrReportRow> rows;
  for (const auto& [layer, predicted] : prediction.per_layer) {
    rows.push_back(report::SqnrReportRow{layer, predicted, measured.at(layer)});
  }
  rows.push_back(
      report::SqnrReportRow{"output", prediction.output, measured.at("output")});
  return rows;
}

}  // namespace

int cmd_stats(const RunConfig& config) {
  const Model model = load_prepared_model(config);
  const auto stats = compute_stats(config, model);
  fs::create_directories(config.out_dir);
  report::write_stats_csv(config.out_dir / "stats.csv", stats);
  std::cout << "wrote " << (config.out_dir / "stats.csv").string() << " ("
            << stats.size() << " tensors)\n";
  return 0;
}

int cmd_allocate(const RunConfig& config) {
  const Model model = load_prepared_model(config);
  if (!config.calib_paths.empty()) {
    // Keep the statistics alongside the allocation so a later quantize run
    // does not need to redo the calibration pass.
    fs::create_directories(config.out_dir);
    report::write_stats_csv(config.out_dir / "stats.csv",
                            compute_stats(config, model));
  }
  const AllocationProblem problem = build_problem(config, model);
  const BitAllocation optimized = solve_waterfilling(problem);
  const BitAllocation equal = equal_allocate(problem);

  fs::create_directories(config.out_dir);
  const auto rep = make_report(problem, optimized, equal);
  report::write_allocation_csv(config.out_dir / "allocation.csv", rep);

  // Offsets of the free (convolutional) weight steps relative to the first,
  // from the closed-form rule.
  std::vector<double> rhos;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < problem.steps.size(); ++i) {
    const StepBounds b = problem.bounds[i];
    if (b.min_bits != b.max_bits && problem.steps[i].rho > 0.0) {
      rhos.push_back(problem.steps[i].rho);
      labels.push_back(problem.steps[i].label);
    }
  }
  if (rhos.size() >= 2) {
    const auto offsets = relative_bitwidths(rhos, config.kappa);
    std::cout << "relative bit-width offsets:";
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      std::cout << " " << labels[i] << "=" << offsets[i];
    }
    std::cout << "\n";
  }
  std::cout << "optimized total bits: " << report::format_real(optimized.total_cost_bits)
            << " (predicted " << report::format_db(optimized.predicted_output)
            << " dB)\n";
  std::cout << "equal-bit total bits: " << report::format_real(equal.total_cost_bits)
            << " (predicted " << report::format_db(equal.predicted_output)
            << " dB)\n";
  return 0;
}

int cmd_quantize(const RunConfig& config) {
  const Model model = load_prepared_model(config);
  const auto stats = stats_for(config, model);

  PlanBits bits;
  if (config.uniform_bits > 0) {
    for (const auto& name : quantizable_layers(model)) {
      bits.weight_bits[name] = config.uniform_bits;
      bits.act_bits[name] = config.uniform_bits;
    }
    bits.input_bits = config.input_bits;
  } else {
    const fs::path alloc_path = config.allocation_path.empty()
                                    ? config.out_dir / "allocation.csv"
                                    : config.allocation_path;
    bits = bits_from_report(report::read_allocation_csv(alloc_path), config.policy);
  }

  const QuantizationPlan plan = derive_plan(config, model, stats, bits);
  plan.validate_against(model);

  fs::create_directories(config.out_dir);
  report::write_plan(config.out_dir / "plan.txt", plan);

  // Converted model: parameters quantized to their fixed-point grids.
  Model converted = model;
  for (auto& layer : converted.layers) {
    if (!is_quantizable(layer.kind)) continue;
    const QFormat& fmt = plan.weight_formats.at(layer.name);
    for (auto& [role, tensor] : layer.params) {
      quantize_in_place(tensor.data, fmt);
    }
  }
  const fs::path fixed_dir = config.out_dir / "model_fixed";
  fs::create_directories(fixed_dir);
  save_model(converted, fixed_dir / "model.json");

  std::cout << "wrote " << (config.out_dir / "plan.txt").string() << " and "
            << (fixed_dir / "model.json").string() << "\n";
  return 0;
}

int cmd_simulate(const RunConfig& config) {
  const Model model = load_prepared_model(config);
  const fs::path plan_path =
      config.plan_path.empty() ? config.out_dir / "plan.txt" : config.plan_path;
  const QuantizationPlan plan = report::read_plan(plan_path);
  plan.validate_against(model);
  const auto batches = load_calibration(config, model);

  const auto rows = simulate_rows(config, model, plan, batches.front());
  fs::create_directories(config.out_dir);
  report::write_sqnr_csv(config.out_dir / "sqnr_report.csv", rows);
  for (const auto& row : rows) {
    std::cout << row.layer << ": predicted " << report::format_db(row.predicted)
              << " dB, measured " << report::format_db(row.measured) << " dB\n";
  }
  return 0;
}

int cmd_sweep(const RunConfig& config) {
  const Model model = load_prepared_model(config);
  const AllocationProblem problem_template = build_problem(config, model);

  std::map<std::string, TensorStats> stats;
  std::vector<Tensor> batches;
  const bool measure = !config.calib_paths.empty();
  if (measure) {
    batches = load_calibration(config, model);
    stats = collect_stats(model, batches);
  }

  std::vector<report::SweepCsvRow> rows;
  for (double target = config.sweep_min_db;
       target <= config.sweep_max_db + 1e-9; target += config.sweep_step_db) {
    AllocationProblem problem = problem_template;
    problem.constraint = MinOutputSqnr{SqnrDb{target}};
    for (const std::string& policy : {"waterfill", "equal"}) {
      report::SweepCsvRow row;
      row.target_db = target;
      row.policy = policy;
      try {
        const BitAllocation alloc = policy == std::string("waterfill")
                                        ? solve_waterfilling(problem)
                                        : equal_allocate(problem);
        row.feasible = true;
        row.total_bits = alloc.total_cost_bits;
        row.predicted = alloc.predicted_output;
        if (measure) {
          PlanBits bits;
          std::size_t step = 0;
          if (config.input_bits > 0) {
            bits.input_bits = alloc.integer_bits[step++];
          }
          for (const auto& name : quantizable_layers(model)) {
            bits.weight_bits[name] = alloc.integer_bits[step++];
            bits.act_bits[name] = alloc.integer_bits[step++];
          }
          const QuantizationPlan plan = derive_plan(config, model, stats, bits);
          row.measured = measure_layer_sqnr(model, batches.front(), plan).at("output");
          row.has_measured = true;
        }
      } catch (const Error& e) {
        if (e.code() != errc::infeasible) throw;
        row.feasible = false;
      }
      rows.push_back(std::move(row));
    }
  }
  fs::create_directories(config.out_dir);
  report::write_sweep_csv(config.out_dir / "sweep.csv", rows);
  std::cout << "wrote " << (config.out_dir / "sweep.csv").string() << " ("
            << rows.size() << " rows)\n";
  return 0;
}

int cmd_make_fixture(const RunConfig& config) {
  const Model model = make_fixture(config.fixture_name, config.seed);
  fs::create_directories(config.out_dir);
  save_model(model, config.out_dir / "model.json");
  for (int i = 0; i < config.calib_batches; ++i) {
    const Tensor batch = make_gauss_batch(model, config.batch_size,
                                          config.seed + 1000 + i);
    write_blob(config.out_dir / ("calib_" + std::to_string(i) + ".bin"),
               batch.data);
  }
  std::cout << "wrote " << (config.out_dir / "model.json").string() << " and "
            << config.calib_batches << " calibration blob(s)\n";
  return 0;
}

int exit_code_for(const Error& error) noexcept {
  switch (error.code()) {
    case errc::infeasible:
      return 3;
    case errc::internal:
      return 4;
    default:
      return 2;
  }
}

}  // namespace fixquant::cli
