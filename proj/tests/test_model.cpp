#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "pridg/grad_check.hpp"
#include "pridg/model.hpp"

using namespace pridg;
using namespace pridg::model;

namespace {

ModelConfig small_config() {
    ModelConfig cfg;
    cfg.seq_len = 32;
    cfg.conv_channels = {4, 8};
    cfg.kernel = 3;
    cfg.pool = 2;
    cfg.fc_hidden = {16, 8};
    cfg.n_classes = 10;
    cfg.n_domains = 4;
    return cfg;
}

template <class S>
nn::TensorT<S> random_batch(int b, int len, Rng& rng) {
    nn::TensorT<S> x({b, 1, len});
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (auto& v : x.data) v = static_cast<S>(uni(rng));
    return x;
}

template <class S>
nn::TensorT<S> one_hot(const std::vector<int>& labels, int classes) {
    nn::TensorT<S> t({static_cast<int>(labels.size()), classes});
    for (std::size_t i = 0; i < labels.size(); ++i)
        t.data[i * static_cast<std::size_t>(classes) + static_cast<std::size_t>(labels[i])] = S(1);
    return t;
}

std::vector<double> flatten_param_grads(DgModelT<double>& m, bool feature_only) {
    std::vector<double> out;
    auto params = feature_only ? m.feature.params() : m.all_params();
    for (auto* p : params) out.insert(out.end(), p->grad.begin(), p->grad.end());
    return out;
}

}  // namespace

TEST_CASE("feature extractor shape contract and per-sample independence") {
    auto cfg = small_config();
    auto m = build_dg_model<float>(cfg, 11);
    Rng rng(5);
    auto x = random_batch<float>(7, cfg.seq_len, rng);
    nn::Tensor h = extract_features(m, x);
    REQUIRE(h.shape == std::vector<int>{7, m.feature_dim});

    // permuting the batch permutes rows of h identically
    nn::Tensor xp({7, 1, cfg.seq_len});
    std::vector<int> perm{3, 1, 6, 0, 2, 5, 4};
    for (int r = 0; r < 7; ++r)
        for (int i = 0; i < cfg.seq_len; ++i)
            xp.data[static_cast<std::size_t>(r) * cfg.seq_len + i] =
                x.data[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)]) * cfg.seq_len + i];
    nn::Tensor hp = extract_features(m, xp);
    for (int r = 0; r < 7; ++r)
        for (int i = 0; i < m.feature_dim; ++i)
            CHECK(hp.data[static_cast<std::size_t>(r) * m.feature_dim + i] ==
                  h.data[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)]) * m.feature_dim + i]);
}

TEST_CASE("zero conv weights with zero bias give zero features") {
    auto cfg = small_config();
    auto m = build_dg_model<float>(cfg, 1);
    for (auto* p : m.feature.params()) std::fill(p->data.begin(), p->data.end(), 0.0f);
    Rng rng(2);
    auto x = random_batch<float>(3, cfg.seq_len, rng);
    nn::Tensor h = extract_features(m, x);
    for (float v : h.data) CHECK(v == 0.0f);
}

TEST_CASE("classifier heads: shapes and crafted argmax") {
    auto cfg = small_config();
    auto m = build_dg_model<float>(cfg, 3);
    Rng rng(9);
    auto x = random_batch<float>(5, cfg.seq_len, rng);
    nn::Tensor h = extract_features(m, x);

    nn::Tensor y = classify_labels(m, h);
    REQUIRE(y.shape == std::vector<int>{5, cfg.n_classes});
    nn::Tensor z = classify_domain(m, h);
    REQUIRE(z.shape == std::vector<int>{5, cfg.n_domains});

    // softmax of the domain logits sums to one per row
    nn::SoftmaxT<float> sm;
    nn::Tensor p = sm.forward(z);
    for (int n = 0; n < 5; ++n) {
        double sum = 0;
        for (int i = 0; i < cfg.n_domains; ++i) sum += p.data[static_cast<std::size_t>(n) * cfg.n_domains + i];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }

    // crafted domain head: weight row k picks feature k
    auto* lin = dynamic_cast<nn::LinearT<float>*>(m.domain_head.layers()[0].get());
    REQUIRE(lin != nullptr);
    std::fill(lin->weight().data.begin(), lin->weight().data.end(), 0.0f);
    std::fill(lin->bias().data.begin(), lin->bias().data.end(), 0.0f);
    for (int k = 0; k < cfg.n_domains; ++k)
        lin->weight().data[static_cast<std::size_t>(k) * m.feature_dim + k] = 1.0f;
    nn::Tensor crafted({2, m.feature_dim});
    crafted.data[1] = 5.0f;                                       // row 0 peaks at feature 1
    crafted.data[static_cast<std::size_t>(m.feature_dim) + 3] = 5.0f;  // row 1 peaks at feature 3
    nn::Tensor logits = classify_domain(m, crafted);
    CHECK(std::max_element(logits.data.begin(), logits.data.begin() + cfg.n_domains) -
              logits.data.begin() == 1);
    CHECK(std::max_element(logits.data.begin() + cfg.n_domains, logits.data.end()) -
              (logits.data.begin() + cfg.n_domains) == 3);
}

TEST_CASE("grad_reverse forward is the identity") {
    Rng rng(4);
    auto h = random_batch<float>(2, 8, rng);
    nn::Tensor out = grad_reverse(h);
    CHECK(out.data == h.data);
}

TEST_CASE("gradient reversal: F-gradient of domain CE is the exact negation") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto cfg = small_config();
        auto m = build_dg_model<double>(cfg, seed + 100);
        Rng rng(seed);
        auto x = random_batch<double>(4, cfg.seq_len, rng);
        std::uniform_int_distribution<int> dom(0, cfg.n_domains - 1);
        std::vector<int> domains(4);
        for (auto& d : domains) d = dom(rng);
        auto z = one_hot<double>(domains, cfg.n_domains);
        std::vector<int> labels(4, 0);
        auto y = one_hot<double>(labels, cfg.n_classes);

        // pure domain path: alpha=0 and a zeroed label head so label CE sends no gradient to F
        for (auto* p : m.label_head.params()) std::fill(p->data.begin(), p->data.end(), 0.0);

        m.zero_grad();
        dg_forward_backward(m, x, y, z, {}, 0.0, 1.0, true);  // GRL(lambda=1)
        std::vector<double> reversed = flatten_param_grads(m, true);
        std::vector<double> d_grads_a;
        for (auto* p : m.domain_head.params()) d_grads_a.insert(d_grads_a.end(), p->grad.begin(), p->grad.end());

        m.zero_grad();
        dg_forward_backward(m, x, y, z, {}, 0.0, -1.0, true);  // sign flip = no reversal
        std::vector<double> plain = flatten_param_grads(m, true);
        std::vector<double> d_grads_b;
        for (auto* p : m.domain_head.params()) d_grads_b.insert(d_grads_b.end(), p->grad.begin(), p->grad.end());

        REQUIRE(reversed.size() == plain.size());
        bool any_nonzero = false;
        for (std::size_t i = 0; i < reversed.size(); ++i) {
            CHECK(reversed[i] == -plain[i]);
            if (plain[i] != 0) any_nonzero = true;
        }
        CHECK(any_nonzero);
        // D's own gradient is unaffected by the reversal
        CHECK(d_grads_a == d_grads_b);
    }
}

TEST_CASE("lambda=0 sends no domain gradient into F") {
    auto cfg = small_config();
    auto m = build_dg_model<double>(cfg, 8);
    for (auto* p : m.label_head.params()) std::fill(p->data.begin(), p->data.end(), 0.0);
    Rng rng(1);
    auto x = random_batch<double>(3, cfg.seq_len, rng);
    auto y = one_hot<double>({0, 0, 0}, cfg.n_classes);
    auto z = one_hot<double>({1, 2, 3}, cfg.n_domains);
    m.zero_grad();
    dg_forward_backward(m, x, y, z, {}, 0.0, 0.0, true);
    for (double g : flatten_param_grads(m, true)) CHECK(g == 0.0);
}

TEST_CASE("loss terms decompose per the composite objective") {
    auto cfg = small_config();
    auto m = build_dg_model<float>(cfg, 21);
    Rng rng(3);
    auto x = random_batch<float>(4, cfg.seq_len, rng);
    auto y = one_hot<float>({1, 2, 1, 2}, cfg.n_classes);
    auto z = one_hot<float>({0, 0, 1, 1}, cfg.n_domains);
    std::vector<std::pair<int, int>> pairs{{0, 2}, {1, 3}};

    m.zero_grad();
    LossTerms t = dg_forward_backward(m, x, y, z, pairs, 1.0, 0.1, true);
    CHECK(t.total == doctest::Approx(t.label_ce + t.alpha * t.align - t.beta * t.domain_ce).epsilon(1e-6));
    CHECK(t.label_ce >= 0);
    CHECK(t.align >= 0);
    CHECK(t.domain_ce >= 0);

    SUBCASE("alpha=beta=0 reduces the total to the label CE") {
        m.zero_grad();
        LossTerms t0 = dg_forward_backward(m, x, y, z, pairs, 0.0, 0.0, true);
        CHECK(t0.total == t0.label_ce);
    }
}

TEST_CASE("alignment term: identical pairs give zero, hand example gives 4") {
    nn::Tensor h({2, 2});
    h.data = {1, 2, 1, 0};  // h = [1,2], h+ = [1,0]
    nn::Tensor logits({2, 2});
    logits.data = {1, 0, 1, 0};
    nn::Tensor y({2, 2});
    y.data = {1, 0, 1, 0};
    nn::Tensor none;
    LossTerms t = compute_loss<float>(logits, y, none, none, h, {{0, 1}}, 1.0, 0.0);
    CHECK(t.align == doctest::Approx(4.0));

    nn::Tensor same({2, 2});
    same.data = {3, 4, 3, 4};
    LossTerms t2 = compute_loss<float>(logits, y, none, none, same, {{0, 1}}, 1.0, 0.0);
    CHECK(t2.align == doctest::Approx(0.0));
}

TEST_CASE("full label and domain paths pass finite-difference verification") {
    auto cfg = small_config();
    auto m = build_dg_model<double>(cfg, 55);
    Rng rng(6);
    auto x = random_batch<double>(4, cfg.seq_len, rng);
    auto y = one_hot<double>({1, 4, 7, 2}, cfg.n_classes);
    auto z = one_hot<double>({0, 1, 2, 3}, cfg.n_domains);
    std::vector<std::pair<int, int>> pairs{{0, 1}, {2, 3}};

    m.zero_grad();
    dg_forward_backward(m, x, y, z, pairs, 0.7, 0.3, true);
    std::vector<nn::TensorT<double>*> params = m.all_params();
    std::vector<std::vector<double>> analytic;
    for (auto* p : params) analytic.push_back(p->grad);

    auto objective = [&]() {
        nn::TensorT<double> h = m.feature.forward(x);
        nn::TensorT<double> yl = m.label_head.forward(h);
        nn::TensorT<double> zl = m.domain_head.forward(h);
        LossTerms t = compute_loss<double>(yl, y, zl, z, h, pairs, 0.7, 0.3);
        // what F sees: label + align plus the reversed, beta-scaled domain term;
        // C and D each minimize their own CE, so their own-parameter gradients
        // agree with this objective except for D, handled below.
        return t.label_ce + 0.7 * t.align - 0.3 * t.domain_ce;
    };
    auto domain_objective = [&]() {
        nn::TensorT<double> h = m.feature.forward(x);
        nn::TensorT<double> zl = m.domain_head.forward(h);
        return static_cast<double>(nn::cross_entropy(zl, z).loss);
    };

    double worst = 0;
    std::size_t feature_label_count = m.feature.params().size() + m.label_head.params().size();
    for (std::size_t i = 0; i < params.size(); ++i) {
        bool is_domain = i >= feature_label_count;
        // h = 1e-5: the deep stack puts pre-activations close to ReLU kinks,
        // so the wider layer-test step would straddle a nondifferentiability.
        worst = std::max(worst,
                         nn::finite_diff_max_rel_error(*params[i], analytic[i],
                                                       is_domain ? std::function<double()>(domain_objective)
                                                                 : std::function<double()>(objective),
                                                       1e-5));
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("checkpoint round trip preserves weights and config") {
    auto cfg = small_config();
    auto m = build_dg_model<float>(cfg, 77);
    std::string path = (std::filesystem::temp_directory_path() / "pridg_test.ckpt").string();
    save_checkpoint(path, m, R"({"note":"unit"})");

    Checkpoint loaded = load_checkpoint(path);
    CHECK(loaded.model.cfg == cfg);
    auto pa = m.all_params();
    auto pb = loaded.model.all_params();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->data == pb[i]->data);
    CHECK(loaded.extra_json.find("unit") != std::string::npos);
    std::filesystem::remove(path);
}

TEST_CASE("config json round trip") {
    auto cfg = small_config();
    CHECK(model_config_from_json(model_config_to_json(cfg)) == cfg);
}
