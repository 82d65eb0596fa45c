#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pridg/nn.hpp"

namespace pridg::model {

struct ModelConfig {
    int seq_len = 128;
    std::vector<int> conv_channels = {16, 32, 64, 64};
    int kernel = 5;
    int stride = 1;
    int pool = 2;
    std::vector<int> fc_hidden = {128, 64};
    int n_classes = 10;
    int n_domains = 4;  // source + K generator domains
    double norm_scale = 3200.0;
    double alpha = 1.0;
    double beta = 0.1;

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

// Decomposed value of the composite objective:
//   total = label_ce + alpha * align - beta * domain_ce
struct LossTerms {
    double label_ce = 0.0;
    double align = 0.0;
    double domain_ce = 0.0;
    double total = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
};

// Feature extractor F (4 conv blocks), label classifier C (3 linear layers),
// domain classifier D (1 linear layer; softmax folded into the CE) joined by a
// gradient-reversal coupling between F and D.
template <class S>
struct DgModelT {
    ModelConfig cfg;
    nn::SequentialT<S> feature;
    nn::SequentialT<S> label_head;
    nn::SequentialT<S> domain_head;
    int feature_dim = 0;

    std::vector<nn::TensorT<S>*> all_params() {
        std::vector<nn::TensorT<S>*> out;
        for (auto* p : feature.params()) out.push_back(p);
        for (auto* p : label_head.params()) out.push_back(p);
        for (auto* p : domain_head.params()) out.push_back(p);
        return out;
    }

    void zero_grad() {
        feature.zero_grad();
        label_head.zero_grad();
        domain_head.zero_grad();
    }
};

using DgModel = DgModelT<float>;

// Feature dimension after the conv stack for a given config.
int compute_feature_dim(const ModelConfig& cfg);

template <class S>
DgModelT<S> build_dg_model(const ModelConfig& cfg, std::uint64_t seed);

// Identity forward; the reversal applies in the backward path (see
// dg_forward_backward), where the upstream gradient is scaled by -lambda.
template <class S>
nn::TensorT<S> grad_reverse(const nn::TensorT<S>& h) {
    return h;
}

template <class S>
nn::TensorT<S> extract_features(DgModelT<S>& m, const nn::TensorT<S>& batch) {
    return m.feature.forward(batch);
}

template <class S>
nn::TensorT<S> classify_labels(DgModelT<S>& m, const nn::TensorT<S>& h) {
    return m.label_head.forward(h);
}

template <class S>
nn::TensorT<S> classify_domain(DgModelT<S>& m, const nn::TensorT<S>& h) {
    return m.domain_head.forward(grad_reverse(h));
}

// Pure value of the composite loss given precomputed logits and features.
// `pairs` maps (source row, augmented row) within the batch.
template <class S>
LossTerms compute_loss(const nn::TensorT<S>& label_logits, const nn::TensorT<S>& y_onehot,
                       const nn::TensorT<S>& domain_logits, const nn::TensorT<S>& z_onehot,
                       const nn::TensorT<S>& h, const std::vector<std::pair<int, int>>& pairs,
                       double alpha, double beta);

// One full forward + backward over a combined batch. Parameter gradients are
// accumulated into the model (call zero_grad first). D's own parameters see
// the plain domain-CE gradient; F receives it scaled by -beta (gradient
// reversal). `domain_enabled` false skips the domain path entirely.
template <class S>
LossTerms dg_forward_backward(DgModelT<S>& m, const nn::TensorT<S>& x,
                              const nn::TensorT<S>& y_onehot, const nn::TensorT<S>& z_onehot,
                              const std::vector<std::pair<int, int>>& pairs, double alpha,
                              double beta, bool domain_enabled);

// --- Checkpoint I/O ------------------------------------------------------

// Versioned binary: magic + version, JSON manifest (config, layer list,
// extra metadata), then row-major float32 buffers in parameter order.
void save_checkpoint(const std::string& path, DgModel& model, const std::string& extra_json = "{}");

struct Checkpoint {
    DgModel model;
    std::string extra_json;
};
Checkpoint load_checkpoint(const std::string& path);

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& json_text);

}  // namespace pridg::model
