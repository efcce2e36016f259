#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fixquant/quantizer.hpp"

namespace fixquant {

// One quantization step in the network: a tensor class (input, a layer's
// weights, or a layer's activations) quantized at some bit-width. `rho` is
// the cost weight of the step (parameter count for model size, MAC count for
// compute load); steps excluded from a cost objective carry rho = 0.
struct QuantStep {
  std::string label;   // "w(conv0)", "a(conv0)", "a(0)", ...
  int bitwidth = 8;
  double kappa = 3.0;  // dB per bit
  double rho = 0.0;

  SqnrDb predicted_sqnr() const { return predict_sqnr_db(bitwidth, kappa); }
};

// Per-layer theoretical SQNR through the network.
struct SqnrPrediction {
  std::vector<std::pair<std::string, SqnrDb>> per_layer;
  SqnrDb output;
};

// Steps introduced by one layer (typically its weight step and its
// activation step, in that order).
struct LayerSteps {
  std::string layer;
  std::vector<QuantStep> steps;
};

// Harmonic-mean composition: converts each step SQNR to linear, sums the
// reciprocals (+infinity contributes zero), and returns the reciprocal sum's
// inverse in dB. errc::input on empty input.
SqnrDb compose_sqnr(std::span<const SqnrDb> steps);

// Layer l's prediction composes every step up to and including layer l:
// the optional input step first, then each layer's steps in order.
SqnrPrediction predict_network_sqnr(const std::optional<QuantStep>& input_step,
                                    std::span<const LayerSteps> layers);

// Least-squares slope (with intercept) of SQNR vs bit-width; requires at
// least two distinct bit-widths.
double estimate_kappa(std::span<const std::pair<int, SqnrDb>> measured);

}  // namespace fixquant
