#include "fixquant/mc.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fixquant::mc {

std::vector<double> sample(Distribution dist, std::size_t count,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> out(count);
  switch (dist) {
    case Distribution::Uniform: {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (auto& v : out) v = u(rng);
      break;
    }
    case Distribution::Gaussian: {
      std::normal_distribution<double> n(0.0, 1.0);
      for (auto& v : out) v = n(rng);
      break;
    }
    case Distribution::Laplacian: {
      // Unit variance: scale b = 1/sqrt(2), |x| ~ Exp(rate sqrt(2)).
      std::exponential_distribution<double> e(std::sqrt(2.0));
      std::bernoulli_distribution sign(0.5);
      for (auto& v : out) v = sign(rng) ? e(rng) : -e(rng);
      break;
    }
    case Distribution::Gamma: {
      // Two-sided Gamma: |x| ~ Gamma(k=1/2, theta=2/sqrt(3)) has unit
      // variance since E[x^2] = k(k+1)theta^2 = 1.
      std::gamma_distribution<double> g(0.5, 2.0 / std::sqrt(3.0));
      std::bernoulli_distribution sign(0.5);
      for (auto& v : out) v = sign(rng) ? g(rng) : -g(rng);
      break;
    }
  }
  return out;
}

double midrise_quantize(double x, double step, int bitwidth) noexcept {
  const double levels_per_side = std::ldexp(1.0, bitwidth - 1);  // 2^(b-1)
  double idx = std::floor(x / step) + 0.5;
  idx = std::clamp(idx, -(levels_per_side - 0.5), levels_per_side - 0.5);
  return idx * step;
}

double quantization_mse(std::span<const double> samples, double step,
                        int bitwidth) noexcept {
  double acc = 0.0;
  for (double x : samples) {
    const double d = x - midrise_quantize(x, step, bitwidth);
    acc += d * d;
  }
  return samples.empty() ? 0.0 : acc / static_cast<double>(samples.size());
}

SqnrDb midrise_sqnr(std::span<const double> samples, double step,
                    int bitwidth) {
  double signal = 0.0;
  double noise = 0.0;
  for (double x : samples) {
    const double d = x - midrise_quantize(x, step, bitwidth);
    signal += x * x;
    noise += d * d;
  }
  if (signal == 0.0) raise(errc::undefined_sqnr, "midrise_sqnr: zero signal");
  if (noise == 0.0) return SqnrDb::infinite();
  return SqnrDb{10.0 * std::log10(signal / noise)};
}

StepScan scan_optimal_step(std::span<const double> samples, int bitwidth,
                           double lo, double hi, double rel_tol) {
  if (!(lo > 0.0) || !(hi > lo)) {
    raise(errc::range, "scan_optimal_step: bad bracket");
  }
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - (b - a) * kInvPhi;
  double d = a + (b - a) * kInvPhi;
  double fc = quantization_mse(samples, c, bitwidth);
  double fd = quantization_mse(samples, d, bitwidth);
  while ((b - a) > rel_tol * b) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - (b - a) * kInvPhi;
      fc = quantization_mse(samples, c, bitwidth);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + (b - a) * kInvPhi;
      fd = quantization_mse(samples, d, bitwidth);
    }
  }
  const double step = 0.5 * (a + b);
  return StepScan{step, quantization_mse(samples, step, bitwidth)};
}

}  // namespace fixquant::mc
