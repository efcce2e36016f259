#include "fixquant/fixture.hpp"

#include <cmath>
#include <random>
#include <string>

namespace fixquant {

namespace {

Tensor gauss_tensor(std::vector<std::int64_t> shape, double sigma,
                    std::mt19937_64& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  std::normal_distribution<double> dist(0.0, sigma);
  for (double& v : t.data) {
    v = static_cast<double>(static_cast<float>(dist(rng)));
  }
  return t;
}

LayerSpec conv(const std::string& name, int in_ch, int out_ch, int kernel,
               int stride, int padding, std::mt19937_64& rng) {
  LayerSpec layer;
  layer.name = name;
  layer.kind = LayerKind::Conv2d;
  layer.in_channels = in_ch;
  layer.out_channels = out_ch;
  layer.kernel_h = kernel;
  layer.kernel_w = kernel;
  layer.stride = stride;
  layer.padding = padding;
  const double sigma = 1.0 / std::sqrt(static_cast<double>(in_ch) * kernel * kernel);
  layer.params["weight"] = gauss_tensor({out_ch, in_ch, kernel, kernel}, sigma, rng);
  return layer;
}

LayerSpec fc(const std::string& name, int in_features, int out_features,
             std::mt19937_64& rng) {
  LayerSpec layer;
  layer.name = name;
  layer.kind = LayerKind::FullyConnected;
  layer.in_features = in_features;
  layer.out_features = out_features;
  const double sigma = 1.0 / std::sqrt(static_cast<double>(in_features));
  layer.params["weight"] = gauss_tensor({out_features, in_features}, sigma, rng);
  return layer;
}

LayerSpec relu(const std::string& name) {
  LayerSpec layer;
  layer.name = name;
  layer.kind = LayerKind::ReLU;
  return layer;
}

LayerSpec maxpool(const std::string& name, int window, int stride) {
  LayerSpec layer;
  layer.name = name;
  layer.kind = LayerKind::MaxPool;
  layer.window_h = window;
  layer.window_w = window;
  layer.pool_stride = stride;
  return layer;
}

LayerSpec flatten(const std::string& name) {
  LayerSpec layer;
  layer.name = name;
  layer.kind = LayerKind::Flatten;
  return layer;
}

}  // namespace

Model make_identity_fixture() {
  Model model;
  model.name = "identity";
  model.input_shape = {2};
  LayerSpec layer;
  layer.name = "fc0";
  layer.kind = LayerKind::FullyConnected;
  layer.in_features = 2;
  layer.out_features = 2;
  layer.params["weight"] = Tensor{{2, 2}, {1.0, 0.0, 0.0, 1.0}};
  layer.params["bias"] = Tensor{{2}, {0.0, 0.0}};
  model.layers.push_back(std::move(layer));
  model.validate();
  return model;
}

Model make_cifar10_fixture(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Model model;
  model.name = "cifar10_fixture";
  model.input_shape = {3, 32, 32};
  model.layers.push_back(conv("conv0", 3, 256, 3, 1, 0, rng));    //  6912, 30x30
  model.layers.push_back(relu("relu0"));
  model.layers.push_back(maxpool("pool0", 2, 2));                 //  15x15
  model.layers.push_back(conv("conv1", 256, 128, 3, 1, 0, rng));  //  294912, 13x13
  model.layers.push_back(relu("relu1"));
  model.layers.push_back(conv("conv2", 128, 256, 3, 1, 0, rng));  //  294912, 11x11
  model.layers.push_back(relu("relu2"));
  model.layers.push_back(conv("conv3", 256, 256, 3, 1, 0, rng));  //  589824, 9x9
  model.layers.push_back(relu("relu3"));
  model.layers.push_back(maxpool("pool1", 2, 2));                 //  4x4
  model.layers.push_back(conv("conv4", 256, 256, 3, 1, 1, rng));  //  589824, 4x4
  model.layers.push_back(relu("relu4"));
  model.layers.push_back(conv("conv5", 256, 128, 7, 1, 2, rng));  // 1605632, 2x2
  model.layers.push_back(relu("relu5"));
  model.layers.push_back(flatten("flat0"));                       //  512
  model.layers.push_back(fc("fc0", 512, 10, rng));                //  5120
  model.validate();
  return model;
}

Model make_alexnet_fixture(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Model model;
  model.name = "alexnet_fixture";
  model.input_shape = {3, 224, 224};
  model.layers.push_back(conv("conv1", 3, 96, 7, 2, 3, rng));     //  14112, 112x112
  model.layers.push_back(relu("relu1"));
  model.layers.push_back(maxpool("pool1", 2, 2));                 //  56x56
  model.layers.push_back(conv("conv2", 96, 160, 5, 2, 2, rng));   //  384000, 28x28
  model.layers.push_back(relu("relu2"));
  model.layers.push_back(maxpool("pool2", 2, 2));                 //  14x14
  model.layers.push_back(conv("conv3", 160, 192, 3, 1, 1, rng));  //  276480, 14x14
  model.layers.push_back(relu("relu3"));
  model.layers.push_back(conv("conv4", 192, 192, 3, 1, 1, rng));  //  331776, 14x14
  model.layers.push_back(relu("relu4"));
  model.layers.push_back(conv("conv5", 192, 160, 3, 1, 1, rng));  //  276480, 14x14
  model.layers.push_back(relu("relu5"));
  model.layers.push_back(maxpool("pool5", 2, 2));                 //  7x7
  model.layers.push_back(flatten("flat1"));                       //  7840
  model.layers.push_back(fc("fc1", 7840, 2048, rng));             // 16056320
  model.layers.push_back(relu("relu6"));
  model.layers.push_back(fc("fc2", 2048, 2048, rng));             //  4194304
  model.validate();
  return model;
}

Model make_gauss_chain_fixture(int layer_count, std::uint64_t seed,
                               bool with_relu) {
  if (layer_count < 1 || layer_count > 8) {
    raise(errc::range, "gauss chain: layer_count outside [1, 8]");
  }
  std::mt19937_64 rng(seed);
  Model model;
  model.name = with_relu ? "gauss_chain_relu" : "gauss_chain";
  model.input_shape = {4, 16, 16};
  // Channel growth gives each layer a distinct parameter count so relative
  // bit-width offsets are nontrivial.
  const int channels[9] = {4, 8, 16, 16, 24, 32, 32, 32, 32};
  for (int l = 1; l <= layer_count; ++l) {
    model.layers.push_back(
        conv("conv" + std::to_string(l), channels[l - 1], channels[l], 3, 1, 1, rng));
    if (with_relu && l < layer_count) {
      model.layers.push_back(relu("relu" + std::to_string(l)));
    }
  }
  model.validate();
  return model;
}

Model make_fixture(std::string_view name, std::uint64_t seed) {
  if (name == "identity") return make_identity_fixture();
  if (name == "cifar10") return make_cifar10_fixture(seed);
  if (name == "alexnet") return make_alexnet_fixture(seed);
  if (name == "chain5") return make_gauss_chain_fixture(5, seed, false);
  if (name == "chain5-relu") return make_gauss_chain_fixture(5, seed, true);
  raise(errc::input, "unknown fixture name: " + std::string(name) +
                         " (expected identity, cifar10, alexnet, chain5, "
                         "chain5-relu)");
}

Tensor make_gauss_batch(const Model& model, std::int64_t batch,
                        std::uint64_t seed) {
  std::vector<std::int64_t> shape;
  shape.push_back(batch);
  shape.insert(shape.end(), model.input_shape.begin(), model.input_shape.end());
  std::mt19937_64 rng(seed);
  Tensor t = Tensor::zeros(std::move(shape));
  std::normal_distribution<double> dist(0.0, 1.0);
  for (double& v : t.data) {
    v = static_cast<double>(static_cast<float>(dist(rng)));
  }
  return t;
}

}  // namespace fixquant
