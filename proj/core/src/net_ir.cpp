#include "fixquant/net_ir.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <span>

#include <json.hpp>

namespace fixquant {

using ordered_json = nlohmann::ordered_json;

// --- Tensor ------------------------------------------------------------

Tensor::Tensor(std::vector<std::int64_t> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  validate();
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape_) {
  std::int64_t n = 1;
  for (auto d : shape_) n *= d;
  Tensor t;
  t.shape = std::move(shape_);
  t.data.assign(static_cast<std::size_t>(n), 0.0);
  t.validate();
  return t;
}

std::int64_t Tensor::numel() const noexcept {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

void Tensor::validate() const {
  if (shape.empty()) raise(errc::shape_mismatch, "tensor has empty shape");
  for (auto d : shape) {
    if (d < 1) raise(errc::shape_mismatch, "tensor dimension < 1");
  }
  if (numel() != static_cast<std::int64_t>(data.size())) {
    raise(errc::shape_mismatch,
          "tensor data length " + std::to_string(data.size()) +
              " does not match shape product " + std::to_string(numel()));
  }
  for (double v : data) {
    if (!std::isfinite(v)) raise(errc::input, "tensor holds non-finite value");
  }
}

// --- LayerSpec ---------------------------------------------------------

const char* layer_kind_name(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::Conv2d: return "Conv2d";
    case LayerKind::FullyConnected: return "FullyConnected";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::BatchNorm: return "BatchNorm";
    case LayerKind::MaxPool: return "MaxPool";
    case LayerKind::AvgPool: return "AvgPool";
    case LayerKind::Flatten: return "Flatten";
  }
  return "unknown";
}

LayerKind layer_kind_from_name(std::string_view name) {
  if (name == "Conv2d") return LayerKind::Conv2d;
  if (name == "FullyConnected") return LayerKind::FullyConnected;
  if (name == "ReLU") return LayerKind::ReLU;
  if (name == "BatchNorm") return LayerKind::BatchNorm;
  if (name == "MaxPool") return LayerKind::MaxPool;
  if (name == "AvgPool") return LayerKind::AvgPool;
  if (name == "Flatten") return LayerKind::Flatten;
  raise(errc::parse, "unknown layer kind: " + std::string(name));
}

bool LayerSpec::has_param(const std::string& role) const {
  return params.find(role) != params.end();
}

const Tensor& LayerSpec::param(const std::string& role) const {
  auto it = params.find(role);
  if (it == params.end()) {
    raise(errc::structure, "layer '" + name + "' has no param '" + role + "'");
  }
  return it->second;
}

bool is_quantizable(LayerKind kind) noexcept {
  return kind == LayerKind::Conv2d || kind == LayerKind::FullyConnected;
}

// --- Validation / shape inference --------------------------------------

namespace {

[[noreturn]] void layer_error(const LayerSpec& layer, const std::string& what) {
  raise(errc::shape_mismatch, "layer '" + layer.name + "': " + what);
}

void check_param_shape(const LayerSpec& layer, const std::string& role,
                       const std::vector<std::int64_t>& expect) {
  const Tensor& t = layer.param(role);
  if (t.shape != expect) {
    std::string got, want;
    for (auto d : t.shape) got += std::to_string(d) + " ";
    for (auto d : expect) want += std::to_string(d) + " ";
    layer_error(layer, role + " shape [" + got + "] != expected [" + want + "]");
  }
}

std::int64_t conv_out_dim(std::int64_t in, int kernel, int pad, int stride) {
  return (in + 2 * pad - kernel) / stride + 1;
}

std::int64_t pool_out_dim(std::int64_t in, int window, int stride) {
  return (in - window) / stride + 1;
}

std::vector<std::int64_t> infer_layer_shape(
    const LayerSpec& layer, const std::vector<std::int64_t>& in) {
  switch (layer.kind) {
    case LayerKind::Conv2d: {
      if (in.size() != 3) layer_error(layer, "Conv2d expects CHW input");
      if (in[0] != layer.in_channels) {
        layer_error(layer, "in_channels " + std::to_string(layer.in_channels) +
                               " != input channels " + std::to_string(in[0]));
      }
      if (layer.kernel_h < 1 || layer.kernel_w < 1 || layer.stride < 1 ||
          layer.padding < 0 || layer.out_channels < 1) {
        layer_error(layer, "bad Conv2d attributes");
      }
      const auto oh = conv_out_dim(in[1], layer.kernel_h, layer.padding, layer.stride);
      const auto ow = conv_out_dim(in[2], layer.kernel_w, layer.padding, layer.stride);
      if (oh < 1 || ow < 1) layer_error(layer, "convolution output collapses to zero");
      check_param_shape(layer, "weight",
                        {layer.out_channels, layer.in_channels, layer.kernel_h,
                         layer.kernel_w});
      if (layer.has_param("bias")) {
        check_param_shape(layer, "bias", {layer.out_channels});
      }
      return {layer.out_channels, oh, ow};
    }
    case LayerKind::FullyConnected: {
      if (in.size() != 1) {
        layer_error(layer, "FullyConnected expects flat input (add a Flatten layer)");
      }
      if (in[0] != layer.in_features) {
        layer_error(layer, "in_features " + std::to_string(layer.in_features) +
                               " != input features " + std::to_string(in[0]));
      }
      check_param_shape(layer, "weight", {layer.out_features, layer.in_features});
      if (layer.has_param("bias")) {
        check_param_shape(layer, "bias", {layer.out_features});
      }
      return {layer.out_features};
    }
    case LayerKind::ReLU:
      return in;
    case LayerKind::BatchNorm: {
      if (in.empty()) layer_error(layer, "BatchNorm on empty shape");
      const std::int64_t channels = in[0];
      for (const char* role : {"scale", "shift", "mean", "var"}) {
        check_param_shape(layer, role, {channels});
      }
      if (!(layer.epsilon >= 0.0)) layer_error(layer, "negative epsilon");
      return in;
    }
    case LayerKind::MaxPool:
    case LayerKind::AvgPool: {
      if (in.size() != 3) layer_error(layer, "pool expects CHW input");
      if (layer.window_h < 1 || layer.window_w < 1 || layer.pool_stride < 1) {
        layer_error(layer, "bad pool attributes");
      }
      const auto oh = pool_out_dim(in[1], layer.window_h, layer.pool_stride);
      const auto ow = pool_out_dim(in[2], layer.window_w, layer.pool_stride);
      if (oh < 1 || ow < 1) layer_error(layer, "pool output collapses to zero");
      return {in[0], oh, ow};
    }
    case LayerKind::Flatten: {
      const std::int64_t n = std::accumulate(in.begin(), in.end(),
                                             std::int64_t{1},
                                             std::multiplies<std::int64_t>());
      return {n};
    }
  }
  raise(errc::internal, "unhandled layer kind");
}

}  // namespace

std::vector<std::vector<std::int64_t>> Model::inferred_shapes() const {
  std::vector<std::vector<std::int64_t>> shapes;
  shapes.reserve(layers.size());
  std::vector<std::int64_t> cur = input_shape;
  for (const auto& layer : layers) {
    cur = infer_layer_shape(layer, cur);
    shapes.push_back(cur);
  }
  return shapes;
}

void Model::validate() const {
  if (input_shape.empty()) {
    raise(errc::shape_mismatch, "model has empty input_shape");
  }
  for (auto d : input_shape) {
    if (d < 1) raise(errc::shape_mismatch, "model input dimension < 1");
  }
  std::map<std::string, int> seen;
  for (const auto& layer : layers) {
    if (layer.name.empty()) raise(errc::parse, "layer with empty name");
    if (++seen[layer.name] > 1) {
      raise(errc::structure, "duplicate layer name '" + layer.name + "'");
    }
    for (const auto& [role, tensor] : layer.params) tensor.validate();
  }
  (void)inferred_shapes();
}

const LayerSpec* Model::find_layer(const std::string& layer_name) const {
  for (const auto& layer : layers) {
    if (layer.name == layer_name) return &layer;
  }
  return nullptr;
}

// --- Blob I/O ----------------------------------------------------------

static_assert(std::endian::native == std::endian::little,
              "blob format is little-endian float32");

std::vector<float> read_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) raise(errc::missing_blob, "cannot open blob: " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes % sizeof(float) != 0) {
    raise(errc::shape_mismatch,
          "blob size not a multiple of 4 bytes: " + path.string());
  }
  std::vector<float> out(bytes / sizeof(float));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(out.data()),
          static_cast<std::streamsize>(bytes));
  if (!in) raise(errc::io, "short read: " + path.string());
  return out;
}

void write_blob(const std::filesystem::path& path,
                std::span<const double> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(errc::io, "cannot open for write: " + path.string());
  std::vector<float> buf(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    buf[i] = static_cast<float>(data[i]);
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) raise(errc::io, "short write: " + path.string());
}

Tensor read_tensor_blob(const std::filesystem::path& path,
                        std::vector<std::int64_t> shape) {
  const auto raw = read_blob(path);
  std::int64_t expect = 1;
  for (auto d : shape) expect *= d;
  if (static_cast<std::int64_t>(raw.size()) != expect) {
    raise(errc::shape_mismatch,
          "blob " + path.string() + " holds " + std::to_string(raw.size()) +
              " values, manifest shape wants " + std::to_string(expect));
  }
  Tensor t;
  t.shape = std::move(shape);
  t.data.assign(raw.begin(), raw.end());
  t.validate();
  return t;
}

// --- Manifest ----------------------------------------------------------

namespace {

std::vector<std::int64_t> shape_from_json(const ordered_json& j) {
  std::vector<std::int64_t> shape;
  for (const auto& d : j) shape.push_back(d.get<std::int64_t>());
  return shape;
}

LayerSpec layer_from_json(const ordered_json& j,
                          const std::filesystem::path& base_dir) {
  LayerSpec layer;
  layer.name = j.at("name").get<std::string>();
  layer.kind = layer_kind_from_name(j.at("kind").get<std::string>());
  switch (layer.kind) {
    case LayerKind::Conv2d:
      layer.in_channels = j.at("in_channels").get<int>();
      layer.out_channels = j.at("out_channels").get<int>();
      layer.kernel_h = j.at("kernel").at(0).get<int>();
      layer.kernel_w = j.at("kernel").at(1).get<int>();
      layer.stride = j.at("stride").get<int>();
      layer.padding = j.at("padding").get<int>();
      break;
    case LayerKind::FullyConnected:
      layer.in_features = j.at("in_features").get<int>();
      layer.out_features = j.at("out_features").get<int>();
      break;
    case LayerKind::BatchNorm:
      layer.epsilon = j.at("epsilon").get<double>();
      break;
    case LayerKind::MaxPool:
    case LayerKind::AvgPool:
      layer.window_h = j.at("window").at(0).get<int>();
      layer.window_w = j.at("window").at(1).get<int>();
      layer.pool_stride = j.at("stride").get<int>();
      break;
    case LayerKind::ReLU:
    case LayerKind::Flatten:
      break;
  }
  if (j.contains("params")) {
    for (const auto& [role, spec] : j.at("params").items()) {
      const auto file = spec.at("file").get<std::string>();
      auto shape = shape_from_json(spec.at("shape"));
      layer.params[role] = read_tensor_blob(base_dir / file, std::move(shape));
    }
  }
  return layer;
}

ordered_json layer_to_json(const LayerSpec& layer, const Model& model,
                           const std::filesystem::path& base_dir) {
  ordered_json j;
  j["name"] = layer.name;
  j["kind"] = layer_kind_name(layer.kind);
  switch (layer.kind) {
    case LayerKind::Conv2d:
      j["in_channels"] = layer.in_channels;
      j["out_channels"] = layer.out_channels;
      j["kernel"] = {layer.kernel_h, layer.kernel_w};
      j["stride"] = layer.stride;
      j["padding"] = layer.padding;
      break;
    case LayerKind::FullyConnected:
      j["in_features"] = layer.in_features;
      j["out_features"] = layer.out_features;
      break;
    case LayerKind::BatchNorm:
      j["epsilon"] = layer.epsilon;
      break;
    case LayerKind::MaxPool:
    case LayerKind::AvgPool:
      j["window"] = {layer.window_h, layer.window_w};
      j["stride"] = layer.pool_stride;
      break;
    case LayerKind::ReLU:
    case LayerKind::Flatten:
      break;
  }
  if (!layer.params.empty()) {
    ordered_json params;
    for (const auto& [role, tensor] : layer.params) {
      const std::string file = layer.name + "." + role + ".bin";
      write_blob(base_dir / file, tensor.data);
      ordered_json p;
      p["file"] = file;
      p["shape"] = tensor.shape;
      params[role] = std::move(p);
    }
    j["params"] = std::move(params);
  }
  (void)model;
  return j;
}

}  // namespace

Model load_model(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) raise(errc::input, "cannot open manifest: " + manifest_path.string());
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    raise(errc::parse, "manifest parse error: " + std::string(e.what()));
  }
  Model model;
  try {
    model.version = j.at("version").get<int>();
    if (j.contains("name")) model.name = j.at("name").get<std::string>();
    model.input_shape = shape_from_json(j.at("input_shape"));
    const auto base_dir = manifest_path.parent_path();
    for (const auto& layer_json : j.at("layers")) {
      model.layers.push_back(layer_from_json(layer_json, base_dir));
    }
  } catch (const nlohmann::json::exception& e) {
    raise(errc::parse, "manifest field error: " + std::string(e.what()));
  }
  model.validate();
  return model;
}

void save_model(const Model& model, const std::filesystem::path& manifest_path) {
  model.validate();
  const auto base_dir = manifest_path.parent_path();
  std::error_code ec;
  if (!base_dir.empty()) std::filesystem::create_directories(base_dir, ec);
  ordered_json j;
  j["version"] = model.version;
  if (!model.name.empty()) j["name"] = model.name;
  j["input_shape"] = model.input_shape;
  ordered_json layers = ordered_json::array();
  for (const auto& layer : model.layers) {
    layers.push_back(layer_to_json(layer, model, base_dir));
  }
  j["layers"] = std::move(layers);
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) raise(errc::io, "cannot write manifest: " + manifest_path.string());
  out << j.dump(2) << "\n";
  if (!out) raise(errc::io, "short write: " + manifest_path.string());
}

// --- Batch-norm folding --------------------------------------------------

Model fold_batchnorm(const Model& model) {
  model.validate();
  Model folded;
  folded.version = model.version;
  folded.name = model.name;
  folded.input_shape = model.input_shape;
  for (const auto& layer : model.layers) {
    if (layer.kind != LayerKind::BatchNorm) {
      folded.layers.push_back(layer);
      continue;
    }
    if (folded.layers.empty() || !is_quantizable(folded.layers.back().kind)) {
      raise(errc::structure,
            "BatchNorm '" + layer.name +
                "' is not preceded by a Conv2d or FullyConnected layer");
    }
    LayerSpec& prev = folded.layers.back();
    const Tensor& scale = layer.param("scale");
    const Tensor& shift = layer.param("shift");
    const Tensor& mean = layer.param("mean");
    const Tensor& var = layer.param("var");
    const std::int64_t channels = scale.numel();

    Tensor weight = prev.param("weight");
    if (weight.shape.at(0) != channels) {
      raise(errc::shape_mismatch,
            "BatchNorm '" + layer.name + "' channel count " +
                std::to_string(channels) + " != predecessor output channels " +
                std::to_string(weight.shape.at(0)));
    }
    Tensor bias = prev.has_param("bias")
                      ? prev.param("bias")
                      : Tensor::zeros({channels});

    const std::int64_t per_channel = weight.numel() / channels;
    for (std::int64_t c = 0; c < channels; ++c) {
      const double g = scale.data[c] / std::sqrt(var.data[c] + layer.epsilon);
      for (std::int64_t k = 0; k < per_channel; ++k) {
        weight.data[c * per_channel + k] *= g;
      }
      bias.data[c] = (bias.data[c] - mean.data[c]) * g + shift.data[c];
    }
    prev.params["weight"] = std::move(weight);
    prev.params["bias"] = std::move(bias);
  }
  folded.validate();
  return folded;
}

std::map<std::string, std::int64_t> count_params(const Model& model) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& layer : model.layers) {
    if (!is_quantizable(layer.kind)) continue;
    std::int64_t n = layer.param("weight").numel();
    if (layer.has_param("bias")) n += layer.param("bias").numel();
    counts[layer.name] = n;
  }
  return counts;
}

}  // namespace fixquant
