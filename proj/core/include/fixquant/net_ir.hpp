#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fixquant/error.hpp"

namespace fixquant {

// Dense row-major tensor. Data is held as double for exact accumulation;
// blob files store little-endian float32, so freshly loaded models carry
// float32-representable values.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::int64_t> shape_, std::vector<double> data_);
  static Tensor zeros(std::vector<std::int64_t> shape_);

  std::int64_t numel() const noexcept;
  void validate() const;  // dims >= 1, length match, finite values

  bool operator==(const Tensor&) const = default;
};

enum class LayerKind {
  Conv2d,
  FullyConnected,
  ReLU,
  BatchNorm,
  MaxPool,
  AvgPool,
  Flatten,
};

const char* layer_kind_name(LayerKind kind) noexcept;
LayerKind layer_kind_from_name(std::string_view name);

// One layer of a linear-chain network. Attribute fields are meaningful only
// for the kinds that use them; parameter tensors live in `params` keyed by
// role name ("weight", "bias", and for BatchNorm "scale"/"shift"/"mean"/"var").
struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::ReLU;

  // Conv2d
  int in_channels = 0;
  int out_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int stride = 1;
  int padding = 0;

  // FullyConnected
  int in_features = 0;
  int out_features = 0;

  // BatchNorm
  double epsilon = 1e-5;

  // MaxPool / AvgPool
  int window_h = 0;
  int window_w = 0;
  int pool_stride = 1;

  std::map<std::string, Tensor> params;

  bool has_param(const std::string& role) const;
  const Tensor& param(const std::string& role) const;

  bool operator==(const LayerSpec&) const = default;
};

// Linear-chain network IR. Immutable by convention once validated.
struct Model {
  int version = 1;
  std::string name;
  std::vector<std::int64_t> input_shape;  // without batch dimension
  std::vector<LayerSpec> layers;

  // Validates attributes, parameter shapes, name uniqueness, and runs shape
  // inference end to end. Throws errc::shape_mismatch / errc::structure
  // naming the offending layer.
  void validate() const;

  // Output shape of every layer in order (batch dimension excluded).
  std::vector<std::vector<std::int64_t>> inferred_shapes() const;

  const LayerSpec* find_layer(const std::string& name) const;

  bool operator==(const Model&) const = default;
};

bool is_quantizable(LayerKind kind) noexcept;  // Conv2d or FullyConnected

// Manifest + blob serialization. The manifest is JSON listing layers,
// attributes, and relative blob filenames; each tensor is a raw
// little-endian float32 file validated against the declared shape.
Model load_model(const std::filesystem::path& manifest_path);
void save_model(const Model& model, const std::filesystem::path& manifest_path);

// Raw blob I/O (also used for calibration inputs).
std::vector<float> read_blob(const std::filesystem::path& path);
void write_blob(const std::filesystem::path& path, std::span<const double> data);
Tensor read_tensor_blob(const std::filesystem::path& path,
                        std::vector<std::int64_t> shape);

// Absorbs every BatchNorm layer into the preceding Conv2d/FullyConnected
// layer: w' = w * g, b' = (b - mean) * g + shift with g = scale/sqrt(var+eps),
// applied per output channel. Throws errc::structure when a BatchNorm has no
// foldable predecessor. Idempotent (a folded model has no BatchNorm left).
Model fold_batchnorm(const Model& model);

// Weight+bias element counts for each quantizable layer, keyed by layer name.
std::map<std::string, std::int64_t> count_params(const Model& model);

}  // namespace fixquant
