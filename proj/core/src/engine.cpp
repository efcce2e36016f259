#include "fixquant/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fixquant {

namespace {

struct BatchView {
  std::int64_t batch = 1;
  std::vector<std::int64_t> sample_shape;  // per-sample shape
};

BatchView split_batch(const Model& model, const Tensor& batch) {
  const auto& want = model.input_shape;
  if (batch.shape == want) {
    return BatchView{1, want};
  }
  if (batch.shape.size() == want.size() + 1 &&
      std::equal(want.begin(), want.end(), batch.shape.begin() + 1)) {
    return BatchView{batch.shape[0], want};
  }
  raise(errc::shape_mismatch,
        "batch shape does not match model input shape (leading batch "
        "dimension allowed)");
}

std::int64_t numel(const std::vector<std::int64_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1},
                         std::multiplies<std::int64_t>());
}

void conv2d_forward(const LayerSpec& layer, const double* in,
                    const std::vector<std::int64_t>& in_shape, double* out,
                    const std::vector<std::int64_t>& out_shape,
                    const Tensor& weight, const Tensor* bias) {
  const std::int64_t ic = in_shape[0], ih = in_shape[1], iw = in_shape[2];
  const std::int64_t oc = out_shape[0], oh = out_shape[1], ow = out_shape[2];
  const int kh = layer.kernel_h, kw = layer.kernel_w;
  const int stride = layer.stride, pad = layer.padding;
  for (std::int64_t o = 0; o < oc; ++o) {
    const double b = bias ? bias->data[o] : 0.0;
    const double* wbase = weight.data.data() + o * ic * kh * kw;
    for (std::int64_t y = 0; y < oh; ++y) {
      for (std::int64_t x = 0; x < ow; ++x) {
        double acc = b;
        for (std::int64_t c = 0; c < ic; ++c) {
          const double* wc = wbase + c * kh * kw;
          const double* inc = in + c * ih * iw;
          for (int u = 0; u < kh; ++u) {
            const std::int64_t sy = y * stride - pad + u;
            if (sy < 0 || sy >= ih) continue;
            for (int v = 0; v < kw; ++v) {
              const std::int64_t sx = x * stride - pad + v;
              if (sx < 0 || sx >= iw) continue;
              acc += wc[u * kw + v] * inc[sy * iw + sx];
            }
          }
        }
        out[(o * oh + y) * ow + x] = acc;
      }
    }
  }
}

void fc_forward(const double* in, std::int64_t in_features, double* out,
                std::int64_t out_features, const Tensor& weight,
                const Tensor* bias) {
  for (std::int64_t o = 0; o < out_features; ++o) {
    double acc = bias ? bias->data[o] : 0.0;
    const double* row = weight.data.data() + o * in_features;
    for (std::int64_t i = 0; i < in_features; ++i) acc += row[i] * in[i];
    out[o] = acc;
  }
}

void pool_forward(const LayerSpec& layer, const double* in,
                  const std::vector<std::int64_t>& in_shape, double* out,
                  const std::vector<std::int64_t>& out_shape) {
  const bool is_max = layer.kind == LayerKind::MaxPool;
  const std::int64_t ch = in_shape[0], ih = in_shape[1], iw = in_shape[2];
  const std::int64_t oh = out_shape[1], ow = out_shape[2];
  const int wh = layer.window_h, ww = layer.window_w, stride = layer.pool_stride;
  for (std::int64_t c = 0; c < ch; ++c) {
    const double* inc = in + c * ih * iw;
    for (std::int64_t y = 0; y < oh; ++y) {
      for (std::int64_t x = 0; x < ow; ++x) {
        double acc = is_max ? -std::numeric_limits<double>::infinity() : 0.0;
        for (int u = 0; u < wh; ++u) {
          for (int v = 0; v < ww; ++v) {
            const double s = inc[(y * stride + u) * iw + (x * stride + v)];
            acc = is_max ? std::max(acc, s) : acc + s;
          }
        }
        out[(c * oh + y) * ow + x] = is_max ? acc : acc / (wh * ww);
      }
    }
  }
}

void batchnorm_forward(const LayerSpec& layer, const double* in,
                       const std::vector<std::int64_t>& shape, double* out) {
  const std::int64_t channels = shape[0];
  const std::int64_t inner = numel(shape) / channels;
  const Tensor& scale = layer.param("scale");
  const Tensor& shift = layer.param("shift");
  const Tensor& mean = layer.param("mean");
  const Tensor& var = layer.param("var");
  for (std::int64_t c = 0; c < channels; ++c) {
    const double g = scale.data[c] / std::sqrt(var.data[c] + layer.epsilon);
    const double b = shift.data[c] - mean.data[c] * g;
    for (std::int64_t k = 0; k < inner; ++k) {
      out[c * inner + k] = in[c * inner + k] * g + b;
    }
  }
}

// Shared driver for float and quantized passes. In quantized mode the
// layer's parameters come pre-quantized in `model`, and `act_formats`
// supplies the pre-activation quantization per Conv2d/FC layer.
ForwardResult run_forward(const Model& model, const Tensor& batch,
                          const std::map<std::string, QFormat>* act_formats,
                          const QFormat* input_format) {
  const BatchView view = split_batch(model, batch);
  const auto shapes = model.inferred_shapes();
  const std::int64_t n = view.batch;

  std::vector<double> cur(batch.data);
  if (input_format != nullptr) {
    quantize_in_place(cur, *input_format);
  }
  std::vector<std::int64_t> cur_shape = view.sample_shape;

  ActivationTrace trace;
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    const LayerSpec& layer = model.layers[li];
    const auto& out_shape = shapes[li];
    const std::int64_t in_elems = numel(cur_shape);
    const std::int64_t out_elems = numel(out_shape);
    std::vector<double> next(static_cast<std::size_t>(n * out_elems));

    for (std::int64_t s = 0; s < n; ++s) {
      const double* in = cur.data() + s * in_elems;
      double* out = next.data() + s * out_elems;
      switch (layer.kind) {
        case LayerKind::Conv2d:
          conv2d_forward(layer, in, cur_shape, out, out_shape,
                         layer.param("weight"),
                         layer.has_param("bias") ? &layer.param("bias") : nullptr);
          break;
        case LayerKind::FullyConnected:
          fc_forward(in, cur_shape[0], out, out_shape[0], layer.param("weight"),
                     layer.has_param("bias") ? &layer.param("bias") : nullptr);
          break;
        case LayerKind::ReLU:
          for (std::int64_t k = 0; k < out_elems; ++k) {
            out[k] = in[k] > 0.0 ? in[k] : 0.0;
          }
          break;
        case LayerKind::BatchNorm:
          batchnorm_forward(layer, in, cur_shape, out);
          break;
        case LayerKind::MaxPool:
        case LayerKind::AvgPool:
          pool_forward(layer, in, cur_shape, out, out_shape);
          break;
        case LayerKind::Flatten:
          std::copy(in, in + in_elems, out);
          break;
      }
    }

    if (is_quantizable(layer.kind)) {
      if (act_formats != nullptr) {
        auto it = act_formats->find(layer.name);
        if (it != act_formats->end()) quantize_in_place(next, it->second);
      }
      std::vector<std::int64_t> traced_shape;
      traced_shape.push_back(n);
      traced_shape.insert(traced_shape.end(), out_shape.begin(), out_shape.end());
      trace[layer.name] = Tensor{std::move(traced_shape), next};
    }

    cur = std::move(next);
    cur_shape = out_shape;
  }

  std::vector<std::int64_t> out_shape;
  out_shape.push_back(n);
  out_shape.insert(out_shape.end(), cur_shape.begin(), cur_shape.end());
  return ForwardResult{Tensor{std::move(out_shape), std::move(cur)},
                       std::move(trace)};
}

Model quantize_params(const Model& model, const QuantizationPlan& plan) {
  Model q = model;
  for (auto& layer : q.layers) {
    if (!is_quantizable(layer.kind)) continue;
    const QFormat& fmt = plan.weight_formats.at(layer.name);
    for (auto& [role, tensor] : layer.params) {
      quantize_in_place(tensor.data, fmt);
    }
  }
  return q;
}

}  // namespace

void QuantizationPlan::validate_against(const Model& model) const {
  for (const auto& layer : model.layers) {
    if (!is_quantizable(layer.kind)) continue;
    if (weight_formats.find(layer.name) == weight_formats.end()) {
      raise(errc::plan_coverage,
            "plan has no weight format for layer '" + layer.name + "'");
    }
    if (activation_formats.find(layer.name) == activation_formats.end()) {
      raise(errc::plan_coverage,
            "plan has no activation format for layer '" + layer.name + "'");
    }
  }
  for (const auto& [name, fmt] : weight_formats) {
    const LayerSpec* layer = model.find_layer(name);
    if (layer == nullptr || !is_quantizable(layer->kind)) {
      raise(errc::plan_coverage,
            "plan names unknown or non-quantizable layer '" + name + "'");
    }
    fmt.validate();
  }
  for (const auto& [name, fmt] : activation_formats) {
    const LayerSpec* layer = model.find_layer(name);
    if (layer == nullptr || !is_quantizable(layer->kind)) {
      raise(errc::plan_coverage,
            "plan names unknown or non-quantizable layer '" + name + "'");
    }
    fmt.validate();
  }
  if (input_format) input_format->validate();
}

ForwardResult forward_float(const Model& model, const Tensor& batch) {
  return run_forward(model, batch, nullptr, nullptr);
}

ForwardResult forward_quantized(const Model& model, const Tensor& batch,
                                const QuantizationPlan& plan) {
  plan.validate_against(model);
  const Model q = quantize_params(model, plan);
  return run_forward(q, batch, &plan.activation_formats,
                     plan.input_format ? &*plan.input_format : nullptr);
}

// --- Statistics ----------------------------------------------------------

void StatsAccumulator::add(std::span<const double> values) {
  // Welford update, one value at a time.
  for (double v : values) {
    ++count_;
    const double delta = v - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (v - mean_);
    max_abs_ = std::max(max_abs_, std::abs(v));
  }
}

void StatsAccumulator::merge(const StatsAccumulator& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double delta = other.mean_ - mean_;
  mean_ += delta * nb / (na + nb);
  m2_ += other.m2_ + delta * delta * na * nb / (na + nb);
  count_ += other.count_;
  max_abs_ = std::max(max_abs_, other.max_abs_);
}

TensorStats StatsAccumulator::finish() const {
  if (count_ == 0) raise(errc::input, "statistics over empty data");
  TensorStats s;
  s.count = count_;
  s.mean = mean_;
  s.std_dev = std::sqrt(m2_ / static_cast<double>(count_));
  s.max_abs = max_abs_;
  return s;
}

std::map<std::string, TensorStats> collect_stats(
    const Model& model, std::span<const Tensor> calibration_batches) {
  if (calibration_batches.empty()) {
    raise(errc::input, "collect_stats: no calibration batches");
  }
  model.validate();

  std::map<std::string, StatsAccumulator> accs;
  for (const auto& layer : model.layers) {
    if (!is_quantizable(layer.kind)) continue;
    accs[layer.name + ".weight"].add(layer.param("weight").data);
    if (layer.has_param("bias")) {
      accs[layer.name + ".bias"].add(layer.param("bias").data);
    }
  }
  for (const auto& batch : calibration_batches) {
    accs["input"].add(batch.data);
    const ForwardResult result = forward_float(model, batch);
    for (const auto& [name, tensor] : result.trace) {
      accs[name + ".act"].add(tensor.data);
    }
  }

  std::map<std::string, TensorStats> out;
  for (const auto& [key, acc] : accs) out[key] = acc.finish();
  return out;
}

std::map<std::string, SqnrDb> measure_layer_sqnr(const Model& model,
                                                 const Tensor& batch,
                                                 const QuantizationPlan& plan) {
  const ForwardResult ref = forward_float(model, batch);
  const ForwardResult fix = forward_quantized(model, batch, plan);
  std::map<std::string, SqnrDb> out;
  for (const auto& [name, tensor] : ref.trace) {
    out[name] = measure_sqnr(tensor.data, fix.trace.at(name).data);
  }
  out["output"] = measure_sqnr(ref.output.data, fix.output.data);
  return out;
}

}  // namespace fixquant
