#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fixquant/allocator.hpp"
#include "fixquant/engine.hpp"

namespace fixquant {

// Report emission and re-parsing. All files are CSV (or line-oriented text)
// with a leading `# schema=1` header; numeric formatting is fixed so re-runs
// are byte-identical. dB values print with two decimals, formats as Qb.n.
namespace report {

inline constexpr const char* kSchemaHeader = "# schema=1";

std::string format_db(const SqnrDb& value);   // "16.99", "inf"
std::string format_real(double value);        // shortest round-trip

void write_stats_csv(const std::filesystem::path& path,
                     const std::map<std::string, TensorStats>& stats);
std::map<std::string, TensorStats> read_stats_csv(
    const std::filesystem::path& path);

// Plan file: one `name Qb.n` line per tensor class; `input` names the
// optional network-input format, `<layer>.weight` and `<layer>.act` the
// per-layer formats. Biases share the weight format and are not listed.
void write_plan(const std::filesystem::path& path,
                const QuantizationPlan& plan);
QuantizationPlan read_plan(const std::filesystem::path& path);

struct AllocationRow {
  std::string label;
  double rho = 0.0;
  double beta_continuous = 0.0;
  int beta_integer = 0;
  int equal_beta = 0;
};

struct AllocationReport {
  double kappa = 0.0;
  std::vector<AllocationRow> rows;
  double optimized_total_bits = 0.0;
  SqnrDb optimized_sqnr;
  double equal_total_bits = 0.0;
  SqnrDb equal_sqnr;
};

void write_allocation_csv(const std::filesystem::path& path,
                          const AllocationReport& report);
AllocationReport read_allocation_csv(const std::filesystem::path& path);

struct SqnrReportRow {
  std::string layer;
  SqnrDb predicted;
  SqnrDb measured;
};

void write_sqnr_csv(const std::filesystem::path& path,
                    const std::vector<SqnrReportRow>& rows);

struct SweepCsvRow {
  double target_db = 0.0;
  std::string policy;  // "waterfill" or "equal"
  bool feasible = false;
  double total_bits = 0.0;
  SqnrDb predicted;
  SqnrDb measured;
  bool has_measured = false;
};

void write_sweep_csv(const std::filesystem::path& path,
                     const std::vector<SweepCsvRow>& rows);

}  // namespace report
}  // namespace fixquant
