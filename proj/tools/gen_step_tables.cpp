// Regenerates core/src/step_tables.inc: MSE-optimal step sizes of the
// symmetric uniform quantizer for the four normalized distribution families,
// bit-widths 1..16. Rows 1..4 keep the classic published values; rows 5..16
// are found by a golden-section MSE scan over seeded Monte Carlo samples.
//
// Usage: gen_step_tables [--samples N] [--seed S] [--out FILE]

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include "fixquant/mc.hpp"

using namespace fixquant;

namespace {

constexpr double kPublished[4][4] = {
    {1.0, 0.5, 0.25, 0.125},       // uniform
    {1.596, 0.996, 0.586, 0.335},  // gaussian
    {1.414, 1.087, 0.731, 0.456},  // laplacian
    {1.154, 1.060, 0.796, 0.540},  // gamma
};

std::vector<double> scan_column(Distribution dist, std::size_t samples,
                                std::uint64_t seed) {
  const auto data = mc::sample(dist, samples, seed);
  std::vector<double> steps;
  double lo = 0.05, hi = 4.0;
  for (int bits = 1; bits <= kMaxTableBits; ++bits) {
    const auto result = mc::scan_optimal_step(data, bits, lo, hi, 1e-7);
    steps.push_back(result.step);
    // The optimum shrinks by a factor between ~1.7 and 2 per bit.
    lo = result.step / 4.0;
    hi = result.step * 1.05;
  }
  // The uniform optimum with exact coverage of [-1, 1] is the dyadic value
  // 2^(1-bits); snap when the scan confirms it.
  if (dist == Distribution::Uniform) {
    for (int bits = 1; bits <= kMaxTableBits; ++bits) {
      const double exact = std::ldexp(1.0, 1 - bits);
      if (std::abs(steps[bits - 1] - exact) < 0.005 * exact) {
        steps[bits - 1] = exact;
      }
    }
  }
  return steps;
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t samples = 10'000'000;
  std::uint64_t seed = 20260810;
  std::string out_path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--samples" && i + 1 < argc) {
      samples = std::stoull(argv[++i]);
    } else if (arg == "--seed" && i + 1 < argc) {
      seed = std::stoull(argv[++i]);
    } else if (arg == "--out" && i + 1 < argc) {
      out_path = argv[++i];
    } else {
      std::cerr << "unknown argument: " << arg << "\n";
      return 2;
    }
  }

  const Distribution dists[4] = {Distribution::Uniform, Distribution::Gaussian,
                                 Distribution::Laplacian, Distribution::Gamma};
  std::vector<std::future<std::vector<double>>> futures;
  for (int d = 0; d < 4; ++d) {
    futures.push_back(std::async(std::launch::async, scan_column, dists[d],
                                 samples, seed + static_cast<std::uint64_t>(d)));
  }
  std::vector<std::vector<double>> columns;
  for (auto& f : futures) columns.push_back(f.get());

  // Report scan vs published values for the overlapping rows.
  for (int d = 0; d < 4; ++d) {
    for (int bits = 1; bits <= 4; ++bits) {
      const double got = columns[d][bits - 1];
      const double want = kPublished[d][bits - 1];
      std::fprintf(stderr, "%-9s b=%-2d scan=%.6f published=%.3f (%+.2f%%)\n",
                   distribution_name(dists[d]), bits, got, want,
                   100.0 * (got - want) / want);
    }
  }

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::trunc);
    if (!file) {
      std::cerr << "cannot write " << out_path << "\n";
      return 2;
    }
    out = &file;
  }

  *out << "// Generated by tools/gen_step_tables --samples " << samples
       << " --seed " << seed << "\n";
  *out << "// Rows 1..4 are the published optimal step sizes; rows 5..16 come\n";
  *out << "// from the golden-section Monte Carlo MSE scan.\n";
  *out << "// Indexed by Distribution enum order: uniform, gaussian, "
          "laplacian, gamma.\n";
  *out << "static constexpr double kOptimalStepTable[4][16] = {\n";
  for (int d = 0; d < 4; ++d) {
    *out << "    // " << distribution_name(dists[d]) << "\n    {";
    for (int bits = 1; bits <= kMaxTableBits; ++bits) {
      char buf[40];
      if (bits <= 4) {
        std::snprintf(buf, sizeof(buf), "%g", kPublished[d][bits - 1]);
      } else {
        std::snprintf(buf, sizeof(buf), "%.6g", columns[d][bits - 1]);
      }
      *out << buf << (bits == kMaxTableBits ? "" : ", ");
      if (bits % 6 == 0 && bits != kMaxTableBits) *out << "\n     ";
    }
    *out << (d == 3 ? "},\n" : "},\n");
  }
  *out << "};\n";
  return 0;
}
