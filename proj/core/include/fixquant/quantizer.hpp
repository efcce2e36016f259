#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fixquant/error.hpp"

namespace fixquant {

// Input distribution families for which optimal uniform step sizes are
// tabulated. All families are in normalized form: unit variance for
// Gaussian/Laplacian/Gamma, support [-1, 1] for Uniform.
enum class Distribution { Uniform, Gaussian, Laplacian, Gamma };

const char* distribution_name(Distribution dist) noexcept;
Distribution distribution_from_name(std::string_view name);

// Fixed-point number format. Resolution is 2^-frac_bits; signed formats
// cover [-2^(bitwidth-1), 2^(bitwidth-1)-1] steps of that resolution, so
// zero is exactly representable for bitwidth >= 2.
//
// bitwidth == 1 is the exception: a signed 1-bit format holds the symmetric
// pair {-2^(-frac_bits-1), +2^(-frac_bits-1)} instead of {-r, 0}. The
// asymmetric range collapses to a single useful level at 1 bit, which would
// make 1-bit SQNR meaningless; the symmetric pair matches the optimal 1-bit
// quantizer the step tables describe.
struct QFormat {
  int bitwidth = 8;
  int frac_bits = 0;
  bool is_signed = true;

  double resolution() const noexcept;  // 2^-frac_bits
  double min_value() const noexcept;
  double max_value() const noexcept;

  std::string to_string() const;                 // "Q8.4", "Q8.-2"
  static QFormat parse(std::string_view text);   // errc::parse on bad syntax

  void validate() const;  // errc::range on out-of-range fields

  bool operator==(const QFormat&) const = default;
};

// Calibration statistics for one tensor.
struct TensorStats {
  std::int64_t count = 0;
  double mean = 0.0;
  double std_dev = 0.0;
  double max_abs = 0.0;
};

// Signal-to-quantization-noise ratio in decibels. A +infinity value is the
// documented sentinel for a zero-noise measurement.
struct SqnrDb {
  double db = 0.0;

  static SqnrDb infinite() noexcept;
  static SqnrDb from_linear(double linear);
  double to_linear() const noexcept;  // 10^(db/10)
  bool is_finite() const noexcept;

  bool operator==(const SqnrDb&) const = default;
};

inline constexpr int kMinTableBits = 1;
inline constexpr int kMaxTableBits = 16;

// Step size of the MSE-optimal symmetric uniform quantizer for the
// normalized distribution at the given bit-width. Values for 1..4 bits are
// the classic tabulated ones; 5..16 bits come from an embedded table
// precomputed by a Monte Carlo step-size scan (tools/gen_step_tables).
// Throws errc::range outside [1, 16].
double optimal_step_size(Distribution dist, int bitwidth);

// Derives the fixed-point format for a tensor with the given statistics:
//   xi = xi_multiplier * std_dev   (Gaussian/Laplacian/Gamma)
//   xi = max_abs                   (Uniform: table is normalized to half-range)
//   s  = xi * optimal_step_size(dist, bitwidth)
//   n  = -ceil(log2 s)
// Throws errc::degenerate_stats when the relevant statistic is zero.
QFormat derive_qformat(const TensorStats& stats, int bitwidth,
                       Distribution dist, double xi_multiplier);

// Rounds x to the nearest representable value of fmt (ties away from zero)
// and saturates to the representable range. Returns the dequantized real
// value. Total on finite inputs; errc::input on non-finite values.
double quantize_value(double x, const QFormat& fmt);
std::vector<double> quantize(std::span<const double> values, const QFormat& fmt);
void quantize_in_place(std::span<double> values, const QFormat& fmt);

// 10*log10(sum x^2 / sum (x - x~)^2). Zero noise energy yields the
// +infinity sentinel; zero signal energy is errc::undefined_sqnr.
SqnrDb measure_sqnr(std::span<const double> original,
                    std::span<const double> perturbed);

// The linear bit-width/SQNR model: kappa * bitwidth, in dB.
SqnrDb predict_sqnr_db(int bitwidth, double kappa);

}  // namespace fixquant
