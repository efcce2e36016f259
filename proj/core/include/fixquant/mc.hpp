#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fixquant/quantizer.hpp"

namespace fixquant::mc {

// Seeded samples of the normalized distribution family: U(-1,1), N(0,1),
// unit-variance Laplace, or unit-variance two-sided Gamma(k=1/2).
std::vector<double> sample(Distribution dist, std::size_t count,
                           std::uint64_t seed);

// Symmetric midrise uniform quantizer with 2^bitwidth levels at
// +-(k + 1/2) * step, saturated at the outermost level. This is the
// quantizer family the optimal step-size tables refer to.
double midrise_quantize(double x, double step, int bitwidth) noexcept;

double quantization_mse(std::span<const double> samples, double step,
                        int bitwidth) noexcept;

SqnrDb midrise_sqnr(std::span<const double> samples, double step,
                    int bitwidth);

struct StepScan {
  double step = 0.0;
  double mse = 0.0;
};

// Golden-section search for the MSE-minimizing step over [lo, hi].
// MSE as a function of the step is unimodal for the supported families.
StepScan scan_optimal_step(std::span<const double> samples, int bitwidth,
                           double lo, double hi, double rel_tol = 1e-6);

}  // namespace fixquant::mc
