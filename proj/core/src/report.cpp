#include "fixquant/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fixquant::report {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(errc::io, "cannot write: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::input, "cannot open: " + path.string());
  return in;
}

void expect_schema(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line) || line != kSchemaHeader) {
    raise(errc::parse, "missing '# schema=1' header: " + path.string());
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

double parse_real(const std::string& text, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    raise(errc::parse, "bad number '" + text + "' in " + path.string());
  }
}

}  // namespace

std::string format_db(const SqnrDb& value) {
  if (!value.is_finite()) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", value.db);
  return buf;
}

std::string format_real(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

// --- stats -----------------------------------------------------------------

namespace {

std::string stats_kind(const std::string& key) {
  if (key == "input") return "input";
  if (key.ends_with(".weight")) return "weight";
  if (key.ends_with(".bias")) return "bias";
  if (key.ends_with(".act")) return "activation";
  return "tensor";
}

}  // namespace

void write_stats_csv(const std::filesystem::path& path,
                     const std::map<std::string, TensorStats>& stats) {
  auto out = open_out(path);
  out << kSchemaHeader << "\n";
  out << "tensor,kind,count,mean,std_dev,max_abs\n";
  for (const auto& [key, s] : stats) {
    out << key << "," << stats_kind(key) << "," << s.count << ","
        << format_real(s.mean) << "," << format_real(s.std_dev) << ","
        << format_real(s.max_abs) << "\n";
  }
  if (!out) raise(errc::io, "short write: " + path.string());
}

std::map<std::string, TensorStats> read_stats_csv(
    const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_schema(in, path);
  std::string line;
  std::getline(in, line);  // column header
  std::map<std::string, TensorStats> stats;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 6) {
      raise(errc::parse, "bad stats row in " + path.string());
    }
    TensorStats s;
    s.count = static_cast<std::int64_t>(parse_real(fields[2], path));
    s.mean = parse_real(fields[3], path);
    s.std_dev = parse_real(fields[4], path);
    s.max_abs = parse_real(fields[5], path);
    stats[fields[0]] = s;
  }
  return stats;
}

// --- plan ------------------------------------------------------------------

void write_plan(const std::filesystem::path& path,
                const QuantizationPlan& plan) {
  auto out = open_out(path);
  out << kSchemaHeader << "\n";
  if (plan.input_format) {
    out << "input " << plan.input_format->to_string() << "\n";
  }
  for (const auto& [layer, fmt] : plan.weight_formats) {
    out << layer << ".weight " << fmt.to_string() << "\n";
  }
  for (const auto& [layer, fmt] : plan.activation_formats) {
    out << layer << ".act " << fmt.to_string() << "\n";
  }
  if (!out) raise(errc::io, "short write: " + path.string());
}

QuantizationPlan read_plan(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_schema(in, path);
  QuantizationPlan plan;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto sep = line.find(' ');
    if (sep == std::string::npos) {
      raise(errc::parse, "bad plan line '" + line + "' in " + path.string());
    }
    const std::string key = line.substr(0, sep);
    const QFormat fmt = QFormat::parse(line.substr(sep + 1));
    if (key == "input") {
      plan.input_format = fmt;
    } else if (key.ends_with(".weight")) {
      plan.weight_formats[key.substr(0, key.size() - 7)] = fmt;
    } else if (key.ends_with(".act")) {
      plan.activation_formats[key.substr(0, key.size() - 4)] = fmt;
    } else {
      raise(errc::parse, "bad plan key '" + key + "' in " + path.string());
    }
  }
  return plan;
}

// --- allocation ------------------------------------------------------------

void write_allocation_csv(const std::filesystem::path& path,
                          const AllocationReport& report) {
  auto out = open_out(path);
  char buf[64];
  out << kSchemaHeader << "\n";
  std::snprintf(buf, sizeof(buf), "%.4f", report.kappa);
  out << "# kappa=" << buf << "\n";
  out << "# optimized_total_bits=" << format_real(report.optimized_total_bits)
      << "\n";
  out << "# optimized_predicted_db=" << format_db(report.optimized_sqnr) << "\n";
  out << "# equal_total_bits=" << format_real(report.equal_total_bits) << "\n";
  out << "# equal_predicted_db=" << format_db(report.equal_sqnr) << "\n";
  out << "step,rho,beta_continuous,beta_integer,equal_beta\n";
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%.4f", row.beta_continuous);
    out << row.label << "," << format_real(row.rho) << "," << buf << ","
        << row.beta_integer << "," << row.equal_beta << "\n";
  }
  if (!out) raise(errc::io, "short write: " + path.string());
}

AllocationReport read_allocation_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_schema(in, path);
  AllocationReport report;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "kappa") report.kappa = parse_real(value, path);
      if (key == "optimized_total_bits") {
        report.optimized_total_bits = parse_real(value, path);
      }
      if (key == "equal_total_bits") {
        report.equal_total_bits = parse_real(value, path);
      }
      continue;
    }
    if (line.starts_with("step,")) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 5) {
      raise(errc::parse, "bad allocation row in " + path.string());
    }
    AllocationRow row;
    row.label = fields[0];
    row.rho = parse_real(fields[1], path);
    row.beta_continuous = parse_real(fields[2], path);
    row.beta_integer = static_cast<int>(parse_real(fields[3], path));
    row.equal_beta = static_cast<int>(parse_real(fields[4], path));
    report.rows.push_back(std::move(row));
  }
  return report;
}

// --- SQNR report -------------------------------------------------------------

void write_sqnr_csv(const std::filesystem::path& path,
                    const std::vector<SqnrReportRow>& rows) {
  auto out = open_out(path);
  out << kSchemaHeader << "\n";
  out << "layer,predicted_db,measured_db\n";
  for (const auto& row : rows) {
    out << row.layer << "," << format_db(row.predicted) << ","
        << format_db(row.measured) << "\n";
  }
  if (!out) raise(errc::io, "short write: " + path.string());
}

// --- sweep -------------------------------------------------------------------

void write_sweep_csv(const std::filesystem::path& path,
                     const std::vector<SweepCsvRow>& rows) {
  auto out = open_out(path);
  char buf[64];
  out << kSchemaHeader << "\n";
  out << "target_db,policy,feasible,total_bits,predicted_db,measured_db\n";
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.2f", row.target_db);
    out << buf << "," << row.policy << "," << (row.feasible ? 1 : 0) << ",";
    if (row.feasible) {
      out << format_real(row.total_bits) << "," << format_db(row.predicted);
    } else {
      out << ",";
    }
    out << ",";
    if (row.feasible && row.has_measured) out << format_db(row.measured);
    out << "\n";
  }
  if (!out) raise(errc::io, "short write: " + path.string());
}

}  // namespace fixquant::report
