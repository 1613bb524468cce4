#pragma once

#include "deepmvc/tensor.hpp"

#include <cstdint>
#include <vector>

namespace deepmvc {

enum class OutputActivation { None, Softmax, Sigmoid };

struct MlpSpec {
    std::vector<std::size_t> layer_dims; // input, hidden..., output
    OutputActivation output_activation = OutputActivation::None;
};

// Per-layer weights/biases plus the spec they were built from. All tensors
// are requires_grad leaves owned by one training run.
struct MlpParams {
    MlpSpec spec;
    std::vector<Tensor> weights; // [d_in x d_out]
    std::vector<Tensor> biases;  // [1 x d_out]

    std::vector<Tensor*> trainable();
};

// Glorot-uniform weights, zero biases; bit-deterministic per (spec, seed).
MlpParams init_params(const MlpSpec& spec, std::uint64_t seed);

// relu between layers, output_activation after the last affine.
Tensor mlp_forward(const MlpParams& params, const Tensor& x);

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> m; // sized on first step
    std::vector<std::vector<double>> v;
};

// One Adam update over `params` using the grads populated by backward().
// Parameters with no grad buffer are treated as zero-gradient.
void adam_step(const std::vector<Tensor*>& params, AdamState& state);

void zero_grads(const std::vector<Tensor*>& params);

} // namespace deepmvc
