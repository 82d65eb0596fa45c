#include "pridg/model.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace pridg::model {

using nlohmann::json;

void ModelConfig::validate() const {
    if (seq_len < 8) throw std::invalid_argument("seq_len must be >= 8");
    if (conv_channels.empty()) throw std::invalid_argument("need at least one conv block");
    if (kernel < 1 || stride < 1 || pool < 1) throw std::invalid_argument("bad conv geometry");
    if (fc_hidden.size() != 2) throw std::invalid_argument("label head expects two hidden dims");
    if (n_classes < 2 || n_domains < 1) throw std::invalid_argument("bad head dimensions");
    if (norm_scale <= 0) throw std::invalid_argument("norm_scale must be > 0");
    if (compute_feature_dim(*this) < 1)
        throw std::invalid_argument("conv stack consumes the whole sequence");
}

int compute_feature_dim(const ModelConfig& cfg) {
    int len = cfg.seq_len;
    for (std::size_t i = 0; i < cfg.conv_channels.size(); ++i) {
        len = (len - cfg.kernel) / cfg.stride + 1;
        if (len < 1) return 0;
        len /= cfg.pool;
        if (len < 1) return 0;
    }
    return cfg.conv_channels.back() * len;
}

template <class S>
DgModelT<S> build_dg_model(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    DgModelT<S> m;
    m.cfg = cfg;
    m.feature_dim = compute_feature_dim(cfg);

    Rng rng(seed);
    int in_ch = 1;
    for (int out_ch : cfg.conv_channels) {
        m.feature.template emplace<nn::Conv1dT<S>>(in_ch, out_ch, cfg.kernel, cfg.stride).init(rng);
        m.feature.template emplace<nn::MaxPool1dT<S>>(cfg.pool);
        m.feature.template emplace<nn::ReluT<S>>();
        in_ch = out_ch;
    }
    m.feature.template emplace<nn::FlattenT<S>>();

    m.label_head.template emplace<nn::LinearT<S>>(m.feature_dim, cfg.fc_hidden[0]).init(rng);
    m.label_head.template emplace<nn::ReluT<S>>();
    m.label_head.template emplace<nn::LinearT<S>>(cfg.fc_hidden[0], cfg.fc_hidden[1]).init(rng);
    m.label_head.template emplace<nn::ReluT<S>>();
    m.label_head.template emplace<nn::LinearT<S>>(cfg.fc_hidden[1], cfg.n_classes).init(rng);

    m.domain_head.template emplace<nn::LinearT<S>>(m.feature_dim, cfg.n_domains).init(rng);
    return m;
}

template DgModelT<float> build_dg_model<float>(const ModelConfig&, std::uint64_t);
template DgModelT<double> build_dg_model<double>(const ModelConfig&, std::uint64_t);

template <class S>
LossTerms compute_loss(const nn::TensorT<S>& label_logits, const nn::TensorT<S>& y_onehot,
                       const nn::TensorT<S>& domain_logits, const nn::TensorT<S>& z_onehot,
                       const nn::TensorT<S>& h, const std::vector<std::pair<int, int>>& pairs,
                       double alpha, double beta) {
    LossTerms terms;
    terms.alpha = alpha;
    terms.beta = beta;
    terms.label_ce = static_cast<double>(nn::cross_entropy(label_logits, y_onehot).loss);
    if (!domain_logits.data.empty())
        terms.domain_ce = static_cast<double>(nn::cross_entropy(domain_logits, z_onehot).loss);

    if (!pairs.empty()) {
        int d = h.shape[1];
        double acc = 0.0;
        for (auto [src, aug] : pairs) {
            const S* a = h.data.data() + static_cast<std::size_t>(src) * d;
            const S* b = h.data.data() + static_cast<std::size_t>(aug) * d;
            for (int i = 0; i < d; ++i) {
                double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
                acc += diff * diff;
            }
        }
        terms.align = acc / static_cast<double>(pairs.size());
    }
    terms.total = terms.label_ce + alpha * terms.align - beta * terms.domain_ce;
    return terms;
}

template LossTerms compute_loss<float>(const nn::TensorT<float>&, const nn::TensorT<float>&,
                                       const nn::TensorT<float>&, const nn::TensorT<float>&,
                                       const nn::TensorT<float>&,
                                       const std::vector<std::pair<int, int>>&, double, double);
template LossTerms compute_loss<double>(const nn::TensorT<double>&, const nn::TensorT<double>&,
                                        const nn::TensorT<double>&, const nn::TensorT<double>&,
                                        const nn::TensorT<double>&,
                                        const std::vector<std::pair<int, int>>&, double, double);

template <class S>
LossTerms dg_forward_backward(DgModelT<S>& m, const nn::TensorT<S>& x,
                              const nn::TensorT<S>& y_onehot, const nn::TensorT<S>& z_onehot,
                              const std::vector<std::pair<int, int>>& pairs, double alpha,
                              double beta, bool domain_enabled) {
    nn::TensorT<S> h = m.feature.forward(x);
    int b = h.shape[0], d = h.shape[1];

    nn::TensorT<S> label_logits = m.label_head.forward(h);
    auto ce = nn::cross_entropy(label_logits, y_onehot);
    nn::TensorT<S> gh = m.label_head.backward(ce.grad);

    LossTerms terms;
    terms.alpha = alpha;
    terms.beta = domain_enabled ? beta : 0.0;
    terms.label_ce = static_cast<double>(ce.loss);

    if (!pairs.empty() && alpha != 0.0) {
        double inv = 1.0 / static_cast<double>(pairs.size());
        double acc = 0.0;
        for (auto [src, aug] : pairs) {
            S* ga = gh.data.data() + static_cast<std::size_t>(src) * d;
            S* gb = gh.data.data() + static_cast<std::size_t>(aug) * d;
            const S* a = h.data.data() + static_cast<std::size_t>(src) * d;
            const S* bp = h.data.data() + static_cast<std::size_t>(aug) * d;
            for (int i = 0; i < d; ++i) {
                double diff = static_cast<double>(a[i]) - static_cast<double>(bp[i]);
                acc += diff * diff;
                S g = static_cast<S>(alpha * 2.0 * diff * inv);
                ga[i] += g;
                gb[i] -= g;
            }
        }
        terms.align = acc * inv;
    } else if (!pairs.empty()) {
        double acc = 0.0;
        for (auto [src, aug] : pairs) {
            const S* a = h.data.data() + static_cast<std::size_t>(src) * d;
            const S* bp = h.data.data() + static_cast<std::size_t>(aug) * d;
            for (int i = 0; i < d; ++i) {
                double diff = static_cast<double>(a[i]) - static_cast<double>(bp[i]);
                acc += diff * diff;
            }
        }
        terms.align = acc / static_cast<double>(pairs.size());
    }

    if (domain_enabled) {
        nn::TensorT<S> domain_logits = m.domain_head.forward(grad_reverse(h));
        auto dce = nn::cross_entropy(domain_logits, z_onehot);
        terms.domain_ce = static_cast<double>(dce.loss);
        // D minimizes its CE; the reversal scales what F sees by -beta.
        nn::TensorT<S> gh_dom = m.domain_head.backward(dce.grad);
        for (std::size_t i = 0; i < gh.data.size(); ++i)
            gh.data[i] += static_cast<S>(-beta) * gh_dom.data[i];
    }
    (void)b;

    m.feature.backward(gh);
    terms.total = terms.label_ce + alpha * terms.align - terms.beta * terms.domain_ce;
    return terms;
}

template LossTerms dg_forward_backward<float>(DgModelT<float>&, const nn::TensorT<float>&,
                                              const nn::TensorT<float>&, const nn::TensorT<float>&,
                                              const std::vector<std::pair<int, int>>&, double,
                                              double, bool);
template LossTerms dg_forward_backward<double>(DgModelT<double>&, const nn::TensorT<double>&,
                                               const nn::TensorT<double>&,
                                               const nn::TensorT<double>&,
                                               const std::vector<std::pair<int, int>>&, double,
                                               double, bool);

// --- Checkpoint I/O ------------------------------------------------------

namespace {
constexpr char kMagic[8] = {'P', 'R', 'D', 'G', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::string model_config_to_json(const ModelConfig& cfg) {
    json j{{"seq_len", cfg.seq_len},
           {"conv_channels", cfg.conv_channels},
           {"kernel", cfg.kernel},
           {"stride", cfg.stride},
           {"pool", cfg.pool},
           {"fc_hidden", cfg.fc_hidden},
           {"n_classes", cfg.n_classes},
           {"n_domains", cfg.n_domains},
           {"norm_scale", cfg.norm_scale},
           {"alpha", cfg.alpha},
           {"beta", cfg.beta}};
    return j.dump();
}

ModelConfig model_config_from_json(const std::string& json_text) {
    json j = json::parse(json_text);
    ModelConfig cfg;
    cfg.seq_len = j.at("seq_len");
    cfg.conv_channels = j.at("conv_channels").get<std::vector<int>>();
    cfg.kernel = j.at("kernel");
    cfg.stride = j.at("stride");
    cfg.pool = j.at("pool");
    cfg.fc_hidden = j.at("fc_hidden").get<std::vector<int>>();
    cfg.n_classes = j.at("n_classes");
    cfg.n_domains = j.at("n_domains");
    cfg.norm_scale = j.at("norm_scale");
    cfg.alpha = j.at("alpha");
    cfg.beta = j.at("beta");
    return cfg;
}

void save_checkpoint(const std::string& path, DgModel& model, const std::string& extra_json) {
    json manifest;
    manifest["config"] = json::parse(model_config_to_json(model.cfg));
    manifest["extra"] = json::parse(extra_json);
    json layers = json::array();
    for (const auto& l : model.feature.layers()) layers.push_back("F/" + l->kind());
    for (const auto& l : model.label_head.layers()) layers.push_back("C/" + l->kind());
    for (const auto& l : model.domain_head.layers()) layers.push_back("D/" + l->kind());
    manifest["layers"] = layers;
    std::string mtext = manifest.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
    std::uint64_t mlen = mtext.size();
    out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
    out.write(mtext.data(), static_cast<std::streamsize>(mlen));
    for (auto* p : model.all_params())
        out.write(reinterpret_cast<const char*>(p->data.data()),
                  static_cast<std::streamsize>(p->data.size() * sizeof(float)));
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    std::uint64_t mlen = 0;
    in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
    std::string mtext(mlen, '\0');
    in.read(mtext.data(), static_cast<std::streamsize>(mlen));
    if (!in) throw std::runtime_error("truncated checkpoint manifest: " + path);

    json manifest = json::parse(mtext);
    ModelConfig cfg = model_config_from_json(manifest.at("config").dump());

    Checkpoint ckpt;
    ckpt.model = build_dg_model<float>(cfg, 0);
    ckpt.extra_json = manifest.at("extra").dump();
    for (auto* p : ckpt.model.all_params()) {
        in.read(reinterpret_cast<char*>(p->data.data()),
                static_cast<std::streamsize>(p->data.size() * sizeof(float)));
        if (!in) throw std::runtime_error("truncated checkpoint weights: " + path);
    }
    return ckpt;
}

}  // namespace pridg::model
