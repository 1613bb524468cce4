#include <doctest.h>

#include "deepmvc/errors.hpp"
#include "deepmvc/nets.hpp"

#include <cmath>

using namespace deepmvc;

TEST_CASE("init_params is deterministic and Glorot-bounded") {
    MlpSpec spec{{4, 3}};
    MlpParams a = init_params(spec, 0);
    MlpParams b = init_params(spec, 0);
    CHECK(a.weights[0].data() == b.weights[0].data());

    const double bound = std::sqrt(6.0 / 7.0);
    CHECK(bound == doctest::Approx(0.9258).epsilon(1e-4));
    for (double w : a.weights[0].data()) {
        CHECK(std::abs(w) <= bound);
    }
    for (double bias : a.biases[0].data()) CHECK(bias == 0.0);

    MlpParams c = init_params(spec, 1);
    CHECK(a.weights[0].data() != c.weights[0].data());

    CHECK_THROWS_AS(init_params(MlpSpec{{4}}, 0), ContractViolation);
}

TEST_CASE("mlp_forward composes affine layers") {
    MlpSpec spec{{3, 2}};
    MlpParams p = init_params(spec, 5);
    // zero everything -> zero output
    for (double& w : p.weights[0].data_mut()) w = 0.0;
    Tensor x = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
    Tensor zeroed = mlp_forward(p, x);
    for (double v : zeroed.data()) CHECK(v == 0.0);

    // single linear layer equals matmul + bias
    MlpParams q = init_params(spec, 6);
    q.biases[0].data_mut() = {0.5, -0.5};
    Tensor manual = matmul(x, q.weights[0]) + q.biases[0];
    CHECK(mlp_forward(q, x).data() == manual.data());

    // softmax output rows sum to 1
    MlpParams r = init_params(MlpSpec{{3, 4, 2}, OutputActivation::Softmax}, 7);
    Tensor y = mlp_forward(r, x);
    for (std::size_t i = 0; i < y.rows(); ++i) {
        CHECK(y.at(i, 0) + y.at(i, 1) == doctest::Approx(1.0).epsilon(1e-12));
    }

    CHECK_THROWS_AS(mlp_forward(q, Tensor::matrix(2, 4, std::vector<double>(8))), DimensionError);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    Tensor w = Tensor::from_data({2}, {1.0, -2.0}, true);
    w.zero_grad();
    AdamState st;
    std::vector<Tensor*> params{&w};
    adam_step(params, st);
    adam_step(params, st);
    CHECK(w.data() == std::vector<double>{1.0, -2.0});
}

TEST_CASE("adam: one hand-computed step on f(w) = w^2") {
    Tensor w = Tensor::scalar(1.0, true);
    AdamState st;
    st.lr = 0.1;
    std::vector<Tensor*> params{&w};
    backward(square(w)); // grad = 2
    adam_step(params, st);
    // m_hat = 2, v_hat = 4 -> step = lr * 2 / (2 + eps) ~ 0.1
    CHECK(w.value() == doctest::Approx(0.9).epsilon(1e-7));
}

TEST_CASE("adam minimizes a 2-D quadratic") {
    Tensor w = Tensor::from_data({2}, {1.0, -1.5}, true);
    AdamState st;
    st.lr = 0.05;
    std::vector<Tensor*> params{&w};
    for (int i = 0; i < 500; ++i) {
        w.zero_grad();
        backward(sum(square(w) * Tensor::from_data({2}, {1.0, 2.5})));
        adam_step(params, st);
    }
    CHECK(std::abs(w.at(0)) < 1e-3);
    CHECK(std::abs(w.at(1)) < 1e-3);
}

TEST_CASE("adam rejects parameter set changes") {
    Tensor a = Tensor::scalar(1.0, true);
    Tensor b = Tensor::scalar(2.0, true);
    AdamState st;
    std::vector<Tensor*> one{&a};
    adam_step(one, st);
    std::vector<Tensor*> two{&a, &b};
    CHECK_THROWS_AS(adam_step(two, st), DimensionError);
}
