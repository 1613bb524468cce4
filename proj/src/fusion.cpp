#include "deepmvc/fusion.hpp"

#include "deepmvc/errors.hpp"

#include <cmath>

namespace deepmvc {

FusionSpec FusionSpec::concat() { return FusionSpec{FusionKind::Concat, Tensor()}; }

FusionSpec FusionSpec::weighted_sum(std::size_t views) {
    if (views == 0) throw ContractViolation("weighted_sum fusion needs at least one view");
    FusionSpec s;
    s.kind = FusionKind::WeightedSum;
    s.raw_weights = Tensor::zeros({1, views}, /*requires_grad=*/true); // uniform start
    return s;
}

std::vector<double> FusionSpec::effective_weights() const {
    if (kind != FusionKind::WeightedSum) return {};
    const std::size_t V = raw_weights.size();
    std::vector<double> w(V);
    double m = raw_weights.at(0);
    for (std::size_t v = 1; v < V; ++v) m = std::max(m, raw_weights.at(v));
    double z = 0.0;
    for (std::size_t v = 0; v < V; ++v) {
        w[v] = std::exp(raw_weights.at(v) - m);
        z += w[v];
    }
    for (double& x : w) x /= z;
    return w;
}

Tensor fuse(const FusionSpec& spec, const std::vector<Tensor>& z) {
    if (z.empty()) throw ContractViolation("fuse: no views");
    for (const Tensor& t : z) {
        if (t.rank() != 2 || t.rows() != z[0].rows()) {
            throw DimensionError("fuse: view shape " + shape_str(t.shape()) +
                                 " incompatible with " + shape_str(z[0].shape()));
        }
    }

    if (spec.kind == FusionKind::Concat) return concat(z, 1);

    const std::size_t V = z.size();
    if (!spec.raw_weights.defined() || spec.raw_weights.size() != V) {
        throw DimensionError("fuse: raw_weights sized for " +
                             std::to_string(spec.raw_weights.defined() ? spec.raw_weights.size() : 0) +
                             " views, got " + std::to_string(V));
    }
    for (const Tensor& t : z) {
        if (t.cols() != z[0].cols()) {
            throw DimensionError("fuse: weighted_sum needs equal view dims, got " +
                                 shape_str(t.shape()) + " vs " + shape_str(z[0].shape()));
        }
    }

    Tensor w = softmax(spec.raw_weights, 1); // 1 x V
    Tensor out;
    for (std::size_t v = 0; v < V; ++v) {
        // Slice w[0, v] out of the softmax while keeping the gradient path:
        // multiply by a one-hot row and reduce.
        std::vector<double> pick(V, 0.0);
        pick[v] = 1.0;
        Tensor wv = sum(w * Tensor::matrix(1, V, std::move(pick))); // scalar
        Tensor term = z[v] * wv;
        out = out.defined() ? out + term : term;
    }
    return out;
}

} // namespace deepmvc
