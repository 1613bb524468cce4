#pragma once

#include "deepmvc/tensor.hpp"

#include <vector>

namespace deepmvc {

struct LossWeights {
    double sv = 1.0;
    double mv = 1.0;
    double cm = 1.0;
};

struct ContrastiveConfig {
    double tau = 0.1;
};

struct MiConfig {
    double lambda = 10.0;
    std::size_t dim = 0; // representation dim D; equals encoder output dim
};

// Mean squared reconstruction error over instances and views:
// (1/(nV)) sum_i sum_v ||x_i^(v) - xhat_i^(v)||^2.
Tensor reconstruction_loss(const std::vector<Tensor>& x, const std::vector<Tensor>& x_hat);

// Entry (i,j) = cos(z_u[i], z_v[j]) / tau. Row norms are floored at 1e-12;
// an exactly zero row is rejected as degenerate input.
Tensor pairwise_cosine_logits(const Tensor& z_u, const Tensor& z_v, double tau);

// Multi-view NT-Xent without "other clusters" negative sampling. The negative
// set for positive pair (z_i^(u), z_i^(v)) is {s_ij^(uv), s_ij^(uu), s_ij^(vv) : j != i}:
// exactly 3(n-1) similarities per positive.
Tensor contrastive_loss(const std::vector<Tensor>& z, double tau);

// P = symmetrized (1/n) sum_i z_u[i] z_v[i]^T for simplex-row inputs.
Tensor joint_distribution(const Tensor& z_u, const Tensor& z_v);

// -sum_ab P_ab log( P_ab / (P^u_a P^v_b)^lambda ); lower is better.
// Zero entries contribute exactly 0 (clamped log convention).
Tensor mi_entropy_loss(const Tensor& P, double lambda);

// Average of mi_entropy_loss over unordered view pairs.
Tensor mi_loss_all_pairs(const std::vector<Tensor>& z, double lambda);

// w_sv * l_sv + w_mv * l_mv + w_cm * l_cm; undefined components contribute 0.
Tensor total_loss(const LossWeights& w, const Tensor& l_sv, const Tensor& l_mv, const Tensor& l_cm);

} // namespace deepmvc
