#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fixquant/net_ir.hpp"
#include "fixquant/quantizer.hpp"

namespace fixquant {

// Pre-activation outputs of every Conv2d/FullyConnected layer for one batch,
// keyed by layer name. Recorded after accumulation, before the activation
// function that may follow.
using ActivationTrace = std::map<std::string, Tensor>;

struct ForwardResult {
  Tensor output;
  ActivationTrace trace;
};

// Per-layer fixed-point formats for simulated inference. Weight formats
// apply to the layer's weight and bias tensors; activation formats apply to
// the layer's pre-activation output. The optional input format quantizes the
// network input before the first layer.
struct QuantizationPlan {
  std::map<std::string, QFormat> weight_formats;
  std::map<std::string, QFormat> activation_formats;
  std::optional<QFormat> input_format;

  // Every quantizable layer covered exactly once (errc::plan_coverage).
  void validate_against(const Model& model) const;
};

// Floating-point forward pass. The batch is either a single sample shaped
// like model.input_shape or carries a leading batch dimension.
ForwardResult forward_float(const Model& model, const Tensor& batch);

// Simulated fixed-point forward pass: parameters are quantized with their
// layer's weight format before use, pre-activations are quantized after
// accumulation. Accumulation itself stays in real arithmetic.
ForwardResult forward_quantized(const Model& model, const Tensor& batch,
                                const QuantizationPlan& plan);

// Calibration statistics for every weight tensor, bias tensor, per-layer
// pre-activation, and the network input, aggregated over all batches.
// Keys: "<layer>.weight", "<layer>.bias", "<layer>.act", "input".
std::map<std::string, TensorStats> collect_stats(
    const Model& model, std::span<const Tensor> calibration_batches);

// Runs both passes on the same batch and measures per-layer SQNR between the
// float and quantized pre-activations. The final output SQNR is included
// under the key "output".
std::map<std::string, SqnrDb> measure_layer_sqnr(const Model& model,
                                                 const Tensor& batch,
                                                 const QuantizationPlan& plan);

// Streaming statistics accumulator (mergeable, single pass).
class StatsAccumulator {
public:
  void add(std::span<const double> values);
  void merge(const StatsAccumulator& other);
  TensorStats finish() const;  // errc::input when empty

private:
  std::int64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double max_abs_ = 0.0;
};

}  // namespace fixquant
