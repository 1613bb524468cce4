#pragma once

#include "deepmvc/tensor.hpp"

#include <vector>

namespace deepmvc {

enum class FusionKind { Concat, WeightedSum };

// Weighted-sum fusion keeps trainable raw weights; effective weights are
// softmax(raw_weights), so they stay non-negative and sum to one.
struct FusionSpec {
    FusionKind kind = FusionKind::Concat;
    Tensor raw_weights; // shape {1, V}, requires_grad; WeightedSum only

    static FusionSpec concat();
    static FusionSpec weighted_sum(std::size_t views);

    std::vector<double> effective_weights() const;
};

// Concat -> n x (sum d_v); WeightedSum -> n x d with softmax-normalized
// weights, differentiable w.r.t. raw_weights.
Tensor fuse(const FusionSpec& spec, const std::vector<Tensor>& z);

} // namespace deepmvc
