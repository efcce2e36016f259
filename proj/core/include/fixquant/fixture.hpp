#pragma once

#include <cstdint>
#include <string_view>

#include "fixquant/net_ir.hpp"

namespace fixquant {

// Synthetic model generators used by the CLI's make-fixture subcommand and
// the test suites. Parameters are seeded Gaussians with He-style scale
// (sigma = 1/sqrt(fan_in)), rounded to float32 so serialization round-trips
// bit-exactly. The fabricated architectures carry the layer-wise parameter
// counts of two well-known reference networks; spatial attributes are chosen
// for internal shape consistency.
Model make_identity_fixture();

// conv0..conv5 + fc0; weight counts 6912, 294912, 294912, 589824, 589824,
// 1605632, 5120.
Model make_cifar10_fixture(std::uint64_t seed);

// conv1..conv5 + fc1, fc2; conv weight counts 14112, 384000, 276480, 331776,
// 276480; fc counts 16056320, 4194304.
Model make_alexnet_fixture(std::uint64_t seed);

// Linear convolution chain conv1..convN with growing channel counts and no
// activation functions (optionally ReLU-separated). Suited leading to
// SQNR trend measurements.
Model make_gauss_chain_fixture(int layer_count, std::uint64_t seed,
                               bool with_relu = false);

Model make_fixture(std::string_view name, std::uint64_t seed);

// Seeded standard-Gaussian input batch for a model ([batch, input_shape...]).
Tensor make_gauss_batch(const Model& model, std::int64_t batch,
                        std::uint64_t seed);

}  // namespace fixquant
