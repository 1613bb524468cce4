#pragma once

#include "deepmvc/tensor.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace deepmvc {

// DDC clustering head: hidden = relu(z W1 + b1), alpha = softmax(h W2 + b2).
struct DdcParams {
    Tensor w1, b1; // fused_dim x D_DDC
    Tensor w2, b2; // D_DDC x k

    std::vector<Tensor*> trainable() { return {&w1, &b1, &w2, &b2}; }
    std::size_t hidden_dim() const { return w1.cols(); }
    std::size_t clusters() const { return w2.cols(); }
};

DdcParams init_ddc(std::size_t fused_dim, std::size_t k, std::uint64_t seed,
                   std::size_t hidden_dim = 100);

std::pair<Tensor, Tensor> ddc_forward(const DdcParams& params, const Tensor& z_fused);

// sigma = 0.15 * median pairwise distance between hidden rows (lower median
// for even pair counts). Treated as a constant: no gradient flows through it.
double kernel_bandwidth(const Tensor& hidden);

// kappa_ij = exp(-||h_i - h_j||^2 / (2 sigma^2)); differentiable in hidden.
Tensor gaussian_kernel(const Tensor& hidden, double sigma);

struct DdcLossTerms {
    Tensor l1, l2, l3;
    Tensor sum() const;
};

// The three DDC terms: Cauchy-Schwarz cluster divergence in the kernelized
// hidden space, membership orthogonality, and simplex-corner attraction.
// sigma < 0 means "compute from hidden" via kernel_bandwidth.
DdcLossTerms ddc_loss(const Tensor& alpha, const Tensor& hidden, double sigma = -1.0);

struct ClusterAssignment {
    Tensor alpha;                // n x k, row-stochastic
    std::vector<int> hard_labels; // argmax per row, lowest index on ties
};

std::vector<int> harden(const Tensor& alpha);

struct KmeansResult {
    std::vector<int> labels;
    Tensor centroids; // k x d
    Tensor alpha;     // one-hot n x k
    double inertia = 0.0;
    std::vector<double> inertia_trajectory; // per Lloyd iteration
};

// k-means++ seeding then Lloyd iterations to an assignment fixpoint.
KmeansResult kmeans(const Tensor& x, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters = 100);

} // namespace deepmvc
