#include "deepmvc/nets.hpp"

#include "deepmvc/errors.hpp"
#include "deepmvc/rng.hpp"

#include <cmath>

namespace deepmvc {

std::vector<Tensor*> MlpParams::trainable() {
    std::vector<Tensor*> out;
    out.reserve(weights.size() * 2);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        out.push_back(&weights[i]);
        out.push_back(&biases[i]);
    }
    return out;
}

MlpParams init_params(const MlpSpec& spec, std::uint64_t seed) {
    if (spec.layer_dims.size() < 2) {
        throw ContractViolation("MlpSpec needs at least input and output dims");
    }
    for (std::size_t d : spec.layer_dims) {
        if (d == 0) throw ContractViolation("MlpSpec has a zero layer dim");
    }

    MlpParams p;
    p.spec = spec;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
        const std::size_t d_in = spec.layer_dims[l];
        const std::size_t d_out = spec.layer_dims[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(d_in + d_out));
        std::vector<double> w(d_in * d_out);
        for (double& x : w) x = rng.uniform(-bound, bound);
        p.weights.push_back(Tensor::matrix(d_in, d_out, std::move(w), /*requires_grad=*/true));
        p.biases.push_back(Tensor::zeros({1, d_out}, /*requires_grad=*/true));
    }
    return p;
}

Tensor mlp_forward(const MlpParams& params, const Tensor& x) {
    if (x.rank() != 2 || x.cols() != params.spec.layer_dims.front()) {
        throw DimensionError("mlp_forward input " + shape_str(x.shape()) + " does not match layer " +
                             std::to_string(params.spec.layer_dims.front()));
    }
    Tensor h = x;
    const std::size_t L = params.weights.size();
    for (std::size_t l = 0; l < L; ++l) {
        h = matmul(h, params.weights[l]) + params.biases[l];
        if (l + 1 < L) {
            h = relu(h);
        } else {
            switch (params.spec.output_activation) {
                case OutputActivation::None: break;
                case OutputActivation::Softmax: h = softmax(h, 1); break;
                case OutputActivation::Sigmoid: h = sigmoid(h); break;
            }
        }
    }
    return h;
}

void adam_step(const std::vector<Tensor*>& params, AdamState& state) {
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i]->size(), 0.0);
            state.v[i].assign(params[i]->size(), 0.0);
        }
    }
    if (state.m.size() != params.size()) {
        throw DimensionError("AdamState tracks " + std::to_string(state.m.size()) +
                             " parameters, got " + std::to_string(params.size()));
    }

    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        if (state.m[i].size() != p.size()) {
            throw DimensionError("Adam moment buffer size " + std::to_string(state.m[i].size()) +
                                 " does not match parameter " + shape_str(p.shape()));
        }
        static const std::vector<double> kNoGrad;
        const std::vector<double>& g = p.has_grad() ? p.grad() : kNoGrad;
        std::vector<double>& data = p.data_mut();
        for (std::size_t j = 0; j < data.size(); ++j) {
            const double gj = g.empty() ? 0.0 : g[j];
            state.m[i][j] = state.beta1 * state.m[i][j] + (1.0 - state.beta1) * gj;
            state.v[i][j] = state.beta2 * state.v[i][j] + (1.0 - state.beta2) * gj * gj;
            const double m_hat = state.m[i][j] / bc1;
            const double v_hat = state.v[i][j] / bc2;
            data[j] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
}

void zero_grads(const std::vector<Tensor*>& params) {
    for (Tensor* p : params) p->zero_grad();
}

} // namespace deepmvc
