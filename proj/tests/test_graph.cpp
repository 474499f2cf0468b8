#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "seisgen/graph.hpp"

using namespace seisgen;
using namespace seisgen::nn;

namespace {

using T = Tensor<double>;
using G = Graph<double>;
using V = Var<double>;

// Central-difference check of d(loss)/d(inputs[k]) for every input.
void check_grads(const std::vector<T>& inputs, const std::function<V(G&, std::vector<V>&)>& fn,
                 double eps = 1e-5, double tol = 1e-6) {
    G g;
    std::vector<V> vars;
    for (const T& t : inputs) vars.push_back(g.input(t, true));
    V loss = fn(g, vars);
    g.backward(loss);

    for (size_t k = 0; k < inputs.size(); ++k) {
        const T& analytic = g.grad_of(vars[k]);
        for (Index i = 0; i < inputs[k].size(); ++i) {
            auto eval = [&](double delta) {
                std::vector<T> shifted = inputs;
                shifted[k][i] += delta;
                G g2;
                std::vector<V> vs;
                for (const T& t : shifted) vs.push_back(g2.input(t, true));
                return fn(g2, vs).value()[0];
            };
            const double fd = (eval(eps) - eval(-eps)) / (2 * eps);
            const double ref = std::max({1.0, std::abs(fd), std::abs(analytic[i])});
            CHECK(std::abs(analytic[i] - fd) / ref < tol);
        }
    }
}

V readout(G& g, V x, std::uint64_t seed) {
    // Weighted sum with a fixed random tensor so every output position matters.
    V r = g.constant(T::randn(x.value().shape(), seed));
    return sum_all(mul(x, r));
}

}  // namespace

TEST_CASE("elementwise ops match finite differences") {
    T a = T::randn({2, 3, 4}, 1);
    T b = T::randn({2, 3, 4}, 2);
    check_grads({a, b}, [](G& g, std::vector<V>& v) {
        return readout(g, mul(add(v[0], v[1]), sub(v[0], v[1])), 11);
    });
    check_grads({a}, [](G& g, std::vector<V>& v) {
        return readout(g, silu(scale(v[0], 1.7)), 12);
    });
    check_grads({a}, [](G& g, std::vector<V>& v) { return readout(g, gelu(v[0]), 13); });
    check_grads({a}, [](G& g, std::vector<V>& v) { return readout(g, sigmoid(v[0]), 14); });
    check_grads({a}, [](G& g, std::vector<V>& v) { return readout(g, softplus(v[0]), 15); });
    check_grads({a}, [](G& g, std::vector<V>& v) { return readout(g, tanh_act(v[0]), 16); });
    check_grads({a}, [](G& g, std::vector<V>& v) { return readout(g, square(v[0]), 17); });
    check_grads({a}, [](G& g, std::vector<V>& v) {
        return readout(g, log_offset(exp_(v[0]), 1e-3), 18);
    });
    check_grads({a}, [](G& g, std::vector<V>& v) {
        return readout(g, add_scalar(v[0], 0.3), 19);
    });
}

TEST_CASE("shape ops match finite differences") {
    T a = T::randn({2, 3, 4}, 3);
    check_grads({a}, [](G& g, std::vector<V>& v) {
        return readout(g, reshape(v[0], {4, 6}), 21);
    });
    check_grads({a}, [](G& g, std::vector<V>& v) {
        return readout(g, permute(v[0], {2, 0, 1}), 22);
    });
    T r4 = T::randn({2, 3, 2, 2}, 4);
    check_grads({r4}, [](G& g, std::vector<V>& v) {
        return readout(g, permute(v[0], {0, 2, 1, 3}), 23);
    });
    T b = T::randn({3, 3, 4}, 5);
    check_grads({a, b}, [](G& g, std::vector<V>& v) {
        return readout(g, concat_ch(v[0], v[1]), 24);
    });
    check_grads({a}, [](G& g, std::vector<V>& v) {
        return readout(g, upsample_nearest2x(v[0]), 25);
    });
    check_grads({a}, [](G& g, std::vector<V>& v) {
        return readout(g, crop_hw(v[0], 2, 3), 26);
    });
}

TEST_CASE("bias and matmul ops match finite differences") {
    T x = T::randn({3, 5}, 6);
    T b = T::randn({5}, 7);
    check_grads({x, b}, [](G& g, std::vector<V>& v) {
        return readout(g, add_row_bias(v[0], v[1]), 31);
    });
    T xc = T::randn({4, 2, 3}, 8);
    T bc = T::randn({4}, 9);
    check_grads({xc, bc}, [](G& g, std::vector<V>& v) {
        return readout(g, add_chan_bias(v[0], v[1]), 32);
    });
    T m1 = T::randn({3, 4}, 10);
    T m2 = T::randn({4, 2}, 11);
    check_grads({m1, m2}, [](G& g, std::vector<V>& v) {
        return readout(g, matmul(v[0], v[1]), 33);
    });
    T b1 = T::randn({2, 3, 4}, 12);
    T b2 = T::randn({2, 4, 5}, 13);
    check_grads({b1, b2}, [](G& g, std::vector<V>& v) {
        return readout(g, bmm(v[0], v[1]), 34);
    });
}

TEST_CASE("conv ops match finite differences") {
    T x = T::randn({3, 5, 6}, 14);
    T w = T::randn({4, 3, 3, 3}, 15);
    T b = T::randn({4}, 16);
    check_grads({x, w, b}, [](G& g, std::vector<V>& v) {
        return readout(g, conv2d(v[0], v[1], v[2], 1, 1), 41);
    });
    check_grads({x, w, b}, [](G& g, std::vector<V>& v) {
        return readout(g, conv2d(v[0], v[1], v[2], 2, 1), 42);
    });
    T w1 = T::randn({2, 3, 1, 1}, 17);
    T b1 = T::randn({2}, 18);
    check_grads({x, w1, b1}, [](G& g, std::vector<V>& v) {
        return readout(g, conv2d(v[0], v[1], v[2], 1, 0), 43);
    });
    T xs = T::randn({2, 7, 3}, 19);
    T dw = T::randn({5, 3}, 20);
    T db = T::randn({3}, 21);
    check_grads({xs, dw, db}, [](G& g, std::vector<V>& v) {
        return readout(g, depthwise_conv1d(v[0], v[1], v[2]), 44);
    });
}

TEST_CASE("norm and softmax ops match finite differences") {
    T x = T::randn({4, 3, 2}, 22);
    T gamma = T::randn({4}, 23);
    T beta = T::randn({4}, 24);
    check_grads({x, gamma, beta}, [](G& g, std::vector<V>& v) {
        return readout(g, group_norm(v[0], v[1], v[2], 2), 51);
    }, 1e-5, 1e-5);
    T g2 = T::randn({2}, 25);
    T b2 = T::randn({2}, 26);
    check_grads({x, g2, b2}, [](G& g, std::vector<V>& v) {
        return readout(g, layer_norm(v[0], v[1], v[2]), 52);
    }, 1e-5, 1e-5);
    T s = T::randn({2, 3, 4}, 27);
    check_grads({s}, [](G& g, std::vector<V>& v) {
        return readout(g, softmax_last(v[0]), 53);
    });
}

TEST_CASE("gradients accumulate when a node is reused") {
    T a = T::randn({3, 3}, 28);
    check_grads({a}, [](G& g, std::vector<V>& v) {
        V y = add(mul(v[0], v[0]), scale(v[0], 3.0));
        return readout(g, y, 61);
    });
}

TEST_CASE("params receive gradients through Graph::param") {
    Param<double> p("w", T::randn({2, 2}, 29));
    G g;
    V x = g.input(T::ones({2, 2}), false);
    V y = sum_all(mul(g.param(p), x));
    g.backward(y);
    for (Index i = 0; i < 4; ++i) CHECK(p.grad[i] == doctest::Approx(1.0));
}
