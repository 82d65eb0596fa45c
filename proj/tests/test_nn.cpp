#include <stdexcept>
#include <doctest.h>

#include <cmath>

#include "pridg/grad_check.hpp"
#include "pridg/nn.hpp"

using namespace pridg;
using namespace pridg::nn;

namespace {

TensorT<double> random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
    TensorT<double> t(std::move(shape));
    std::uniform_real_distribution<double> uni(-scale, scale);
    for (auto& v : t.data) v = uni(rng);
    return t;
}

TensorT<double> random_one_hot(int b, int c, Rng& rng) {
    TensorT<double> t({b, c});
    std::uniform_int_distribution<int> cls(0, c - 1);
    for (int n = 0; n < b; ++n) t.data[static_cast<std::size_t>(n) * c + cls(rng)] = 1.0;
    return t;
}

// Scalar objective for gradient checks: weighted sum of the stack output.
double weighted_sum(SequentialT<double>& stack, const TensorT<double>& input,
                    const std::vector<double>& weights) {
    TensorT<double> out = stack.forward(input);
    double acc = 0;
    for (std::size_t i = 0; i < out.data.size(); ++i) acc += weights[i] * out.data[i];
    return acc;
}

double check_stack(SequentialT<double>& stack, TensorT<double> input, Rng& rng) {
    TensorT<double> out = stack.forward(input);
    std::vector<double> weights(out.data.size());
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (auto& w : weights) w = uni(rng);

    stack.zero_grad();
    TensorT<double> upstream(out.shape);
    upstream.data = weights;
    TensorT<double> input_grad = stack.backward(upstream);

    auto loss = [&]() { return weighted_sum(stack, input, weights); };
    return grad_check(stack, input, input_grad.data, loss);
}

}  // namespace

TEST_CASE("conv1d forward definition") {
    Conv1dT<float> conv(1, 1, 3, 1);
    conv.weight().data = {1.0f, 0.0f, -1.0f};
    conv.bias().data = {0.0f};
    Tensor x({1, 1, 4});
    x.data = {1, 2, 3, 4};
    Tensor y = conv.forward(x);
    REQUIRE(y.shape == std::vector<int>{1, 1, 2});
    CHECK(y.data[0] == doctest::Approx(-2.0));
    CHECK(y.data[1] == doctest::Approx(-2.0));
}

TEST_CASE("relu and softmax forward definitions") {
    ReluT<float> relu;
    Tensor x({1, 3});
    x.data = {-1, 0, 2};
    Tensor y = relu.forward(x);
    CHECK(y.data == std::vector<float>{0, 0, 2});

    Tensor up({1, 3});
    up.data = {1, 1, 1};
    Tensor g = relu.backward(up);
    CHECK(g.data == std::vector<float>{0, 0, 1});

    SoftmaxT<float> sm;
    Tensor z({1, 2});
    z.data = {0, 0};
    Tensor p = sm.forward(z);
    CHECK(p.data[0] == doctest::Approx(0.5));
    CHECK(p.data[1] == doctest::Approx(0.5));
}

TEST_CASE("softmax rows sum to one and stay in (0,1)") {
    Rng rng(4);
    SoftmaxT<double> sm;
    TensorT<double> z = random_tensor({16, 10}, rng, 30.0);
    TensorT<double> p = sm.forward(z);
    for (int n = 0; n < 16; ++n) {
        double sum = 0;
        for (int i = 0; i < 10; ++i) {
            double v = p.data[static_cast<std::size_t>(n) * 10 + i];
            CHECK(v > 0.0);
            CHECK(v < 1.0);
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("linear backward maps upstream through the transposed weight") {
    LinearT<float> lin(2, 2);
    lin.weight().data = {1, 2, 3, 4};  // W = [[1,2],[3,4]]
    lin.bias().data = {0, 0};
    Tensor x({1, 2});
    x.data = {1, 1};
    lin.forward(x);
    Tensor up({1, 2});
    up.data = {1, 1};
    Tensor g = lin.backward(up);
    CHECK(g.data[0] == doctest::Approx(4.0));  // W^T g = [1+3, 2+4]
    CHECK(g.data[1] == doctest::Approx(6.0));
}

TEST_CASE("backward without forward context is rejected") {
    Conv1dT<float> conv(1, 1, 3, 1);
    Tensor up({1, 1, 2});
    CHECK_THROWS_AS(conv.backward(up), std::logic_error);
}

TEST_CASE("shape errors name the expected and actual shapes") {
    LinearT<float> lin(4, 2);
    Tensor x({1, 3});
    try {
        lin.forward(x);
        FAIL("expected a shape error");
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        CHECK(msg.find("(B,4)") != std::string::npos);
        CHECK(msg.find("(1,3)") != std::string::npos);
    }
}

TEST_CASE("shape algebra across randomized lengths") {
    Rng rng(8);
    std::uniform_int_distribution<int> len_dist(10, 200), k_dist(1, 7), s_dist(1, 3), w_dist(1, 5);
    for (int trial = 0; trial < 50; ++trial) {
        int len = len_dist(rng), k = k_dist(rng), s = s_dist(rng), w = w_dist(rng);
        if (len < k) continue;
        Conv1dT<double> conv(1, 2, k, s);
        Rng init(1);
        conv.init(init);
        TensorT<double> x = random_tensor({1, 1, len}, rng);
        TensorT<double> y = conv.forward(x);
        CHECK(y.shape[2] == (len - k) / s + 1);
        if (y.shape[2] >= w) {
            MaxPool1dT<double> pool(w);
            TensorT<double> p = pool.forward(y);
            CHECK(p.shape[2] == y.shape[2] / w);
        }
    }
}

TEST_CASE("maxpool routes gradient to the first maximum on ties") {
    MaxPool1dT<float> pool(2);
    Tensor x({1, 1, 4});
    x.data = {3, 3, 1, 2};
    pool.forward(x);
    Tensor up({1, 1, 2});
    up.data = {1, 1};
    Tensor g = pool.backward(up);
    CHECK(g.data == std::vector<float>{1, 0, 0, 1});
}

TEST_CASE("every layer passes central finite-difference checks") {
    Rng rng(77);
    double worst = 0;
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<int> pick(0, 3);
        SequentialT<double> stack;
        TensorT<double> input;
        switch (pick(rng)) {
            case 0: {
                stack.emplace<Conv1dT<double>>(2, 3, 3, 1).init(rng);
                input = random_tensor({2, 2, 12}, rng);
                break;
            }
            case 1: {
                stack.emplace<MaxPool1dT<double>>(2);
                input = random_tensor({2, 3, 10}, rng);
                break;
            }
            case 2: {
                stack.emplace<ReluT<double>>();
                input = random_tensor({3, 7}, rng);
                break;
            }
            default: {
                stack.emplace<LinearT<double>>(6, 4).init(rng);
                input = random_tensor({3, 6}, rng);
                break;
            }
        }
        worst = std::max(worst, check_stack(stack, input, rng));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("softmax finite-difference check") {
    Rng rng(13);
    SequentialT<double> stack;
    stack.emplace<SoftmaxT<double>>();
    double worst = check_stack(stack, random_tensor({3, 5}, rng), rng);
    CHECK(worst < 1e-4);
}

TEST_CASE("cross entropy values") {
    // saturated correct prediction
    TensorT<float> logits({1, 2});
    logits.data = {1000.0f, -1000.0f};
    TensorT<float> target({1, 2});
    target.data = {1.0f, 0.0f};
    CHECK(cross_entropy(logits, target).loss == doctest::Approx(0.0).epsilon(1e-6));

    // uniform over 10 classes
    TensorT<float> u({1, 10});
    TensorT<float> t10({1, 10});
    t10.data[3] = 1.0f;
    CHECK(cross_entropy(u, t10).loss == doctest::Approx(std::log(10.0)));

    // non-one-hot targets rejected
    TensorT<float> bad({1, 2});
    bad.data = {0.5f, 0.5f};
    CHECK_THROWS_AS(cross_entropy(logits, bad), std::invalid_argument);
}

TEST_CASE("cross entropy gradient matches finite differences") {
    Rng rng(31);
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
        TensorT<double> logits = random_tensor({4, 6}, rng, 3.0);
        TensorT<double> target = random_one_hot(4, 6, rng);
        auto res = cross_entropy(logits, target);
        auto loss = [&]() { return static_cast<double>(cross_entropy(logits, target).loss); };
        worst = std::max(worst, finite_diff_max_rel_error(logits, res.grad.data, loss));
        (void)res;
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("sgd step definitions") {
    TensorT<float> w({1});
    w.data = {1.0f};
    w.alloc_grad();
    w.grad = {2.0f};

    SUBCASE("lr=0 leaves parameters unchanged") {
        SgdT<float> opt({&w}, 0.0, 0.9);
        opt.step();
        CHECK(w.data[0] == 1.0f);
    }
    SUBCASE("plain step without momentum") {
        SgdT<float> opt({&w}, 0.1, 0.0);
        opt.step();
        CHECK(w.data[0] == doctest::Approx(0.8));
    }
    SUBCASE("non-finite gradient is a training fault") {
        w.grad = {std::numeric_limits<float>::quiet_NaN()};
        SgdT<float> opt({&w}, 0.1, 0.0);
        CHECK_THROWS_AS(opt.step(), std::runtime_error);
    }
}

TEST_CASE("identity fragment has zero finite-difference error") {
    Rng rng(3);
    SequentialT<double> stack;
    stack.emplace<FlattenT<double>>();
    TensorT<double> input = random_tensor({2, 3, 4}, rng);
    CHECK(check_stack(stack, input, rng) < 1e-9);
}
