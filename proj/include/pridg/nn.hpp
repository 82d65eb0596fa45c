#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "pridg/rng.hpp"

// Minimal dense-tensor and layer library with reverse-mode gradients.
// A fixed sequential-stack engine, no general computation graph. Templated on
// the scalar type: float is the production storage, double instantiations back
// the finite-difference verification in the tests.

namespace pridg::nn {

template <class S>
struct TensorT {
    std::vector<int> shape;
    std::vector<S> data;
    std::vector<S> grad;  // optional, same length when present

    TensorT() = default;
    explicit TensorT(std::vector<int> sh) : shape(std::move(sh)) {
        data.assign(numel(), S(0));
    }

    std::size_t numel() const {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return n;
    }

    void alloc_grad() { grad.assign(data.size(), S(0)); }
    void zero_grad() { std::fill(grad.begin(), grad.end(), S(0)); }

    template <class T>
    TensorT<T> cast() const {
        TensorT<T> out;
        out.shape = shape;
        out.data.assign(data.begin(), data.end());
        if (!grad.empty()) out.grad.assign(grad.begin(), grad.end());
        return out;
    }
};

using Tensor = TensorT<float>;

inline std::string shape_str(const std::vector<int>& s) {
    std::string r = "(";
    for (std::size_t i = 0; i < s.size(); ++i) r += (i ? "," : "") + std::to_string(s[i]);
    return r + ")";
}

template <class S>
void require_shape(const TensorT<S>& t, const std::vector<int>& expected, const char* where) {
    if (t.shape != expected)
        throw std::invalid_argument(std::string(where) + ": expected shape " + shape_str(expected) +
                                    ", got " + shape_str(t.shape));
}

// --- Layers --------------------------------------------------------------

template <class S>
class LayerT {
public:
    virtual ~LayerT() = default;
    virtual TensorT<S> forward(const TensorT<S>& input) = 0;
    virtual TensorT<S> backward(const TensorT<S>& upstream) = 0;
    virtual std::vector<TensorT<S>*> params() { return {}; }
    virtual std::string kind() const = 0;

protected:
    bool has_context_ = false;
    void require_context(const char* where) const {
        if (!has_context_) throw std::logic_error(std::string(where) + ": backward before forward");
    }
};

// Valid cross-correlation over (B, C, L) input.
template <class S>
class Conv1dT : public LayerT<S> {
public:
    Conv1dT(int in_ch, int out_ch, int kernel, int stride)
        : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride) {
        if (in_ch < 1 || out_ch < 1 || kernel < 1 || stride < 1)
            throw std::invalid_argument("Conv1d: bad dimensions");
        weight_ = TensorT<S>({out_ch, in_ch, kernel});
        bias_ = TensorT<S>({out_ch});
        weight_.alloc_grad();
        bias_.alloc_grad();
    }

    void init(Rng& rng) {
        double bound = std::sqrt(6.0 / (in_ch_ * kernel_));
        std::uniform_real_distribution<double> uni(-bound, bound);
        for (auto& w : weight_.data) w = static_cast<S>(uni(rng));
        std::fill(bias_.data.begin(), bias_.data.end(), S(0));
    }

    TensorT<S> forward(const TensorT<S>& input) override {
        if (input.shape.size() != 3 || input.shape[1] != in_ch_)
            throw std::invalid_argument("Conv1d: expected (B," + std::to_string(in_ch_) +
                                        ",L) input, got " + shape_str(input.shape));
        int b = input.shape[0], len = input.shape[2];
        int out_len = (len - kernel_) / stride_ + 1;
        if (out_len < 1) throw std::invalid_argument("Conv1d: input shorter than kernel");

        input_ = input;
        this->has_context_ = true;
        TensorT<S> out({b, out_ch_, out_len});
        const S* x = input.data.data();
        const S* w = weight_.data.data();
        S* y = out.data.data();
        for (int n = 0; n < b; ++n) {
            for (int oc = 0; oc < out_ch_; ++oc) {
                for (int p = 0; p < out_len; ++p) {
                    S acc = bias_.data[static_cast<std::size_t>(oc)];
                    int x0 = p * stride_;
                    for (int ic = 0; ic < in_ch_; ++ic) {
                        const S* xr = x + (static_cast<std::size_t>(n) * in_ch_ + ic) * len + x0;
                        const S* wr = w + (static_cast<std::size_t>(oc) * in_ch_ + ic) * kernel_;
                        for (int k = 0; k < kernel_; ++k) acc += xr[k] * wr[k];
                    }
                    y[(static_cast<std::size_t>(n) * out_ch_ + oc) * out_len + p] = acc;
                }
            }
        }
        return out;
    }

    TensorT<S> backward(const TensorT<S>& upstream) override {
        this->require_context("Conv1d");
        int b = input_.shape[0], len = input_.shape[2];
        int out_len = (len - kernel_) / stride_ + 1;
        require_shape(upstream, {b, out_ch_, out_len}, "Conv1d backward");

        TensorT<S> dx(input_.shape);
        const S* x = input_.data.data();
        const S* w = weight_.data.data();
        const S* g = upstream.data.data();
        for (int n = 0; n < b; ++n) {
            for (int oc = 0; oc < out_ch_; ++oc) {
                for (int p = 0; p < out_len; ++p) {
                    S up = g[(static_cast<std::size_t>(n) * out_ch_ + oc) * out_len + p];
                    bias_.grad[static_cast<std::size_t>(oc)] += up;
                    int x0 = p * stride_;
                    for (int ic = 0; ic < in_ch_; ++ic) {
                        const S* xr = x + (static_cast<std::size_t>(n) * in_ch_ + ic) * len + x0;
                        S* dxr = dx.data.data() + (static_cast<std::size_t>(n) * in_ch_ + ic) * len + x0;
                        const S* wr = w + (static_cast<std::size_t>(oc) * in_ch_ + ic) * kernel_;
                        S* dwr = weight_.grad.data() + (static_cast<std::size_t>(oc) * in_ch_ + ic) * kernel_;
                        for (int k = 0; k < kernel_; ++k) {
                            dwr[k] += up * xr[k];
                            dxr[k] += up * wr[k];
                        }
                    }
                }
            }
        }
        return dx;
    }

    std::vector<TensorT<S>*> params() override { return {&weight_, &bias_}; }
    std::string kind() const override {
        return "conv1d:" + std::to_string(in_ch_) + ":" + std::to_string(out_ch_) + ":" +
               std::to_string(kernel_) + ":" + std::to_string(stride_);
    }

    TensorT<S>& weight() { return weight_; }
    TensorT<S>& bias() { return bias_; }

private:
    int in_ch_, out_ch_, kernel_, stride_;
    TensorT<S> weight_, bias_, input_;
};

// Non-overlapping windowed max over (B, C, L); output length floor(L/window).
// On ties the first (lowest-index) maximum receives the gradient.
template <class S>
class MaxPool1dT : public LayerT<S> {
public:
    explicit MaxPool1dT(int window) : window_(window) {
        if (window < 1) throw std::invalid_argument("MaxPool1d: window must be >= 1");
    }

    TensorT<S> forward(const TensorT<S>& input) override {
        if (input.shape.size() != 3)
            throw std::invalid_argument("MaxPool1d: expected (B,C,L) input, got " +
                                        shape_str(input.shape));
        int b = input.shape[0], c = input.shape[1], len = input.shape[2];
        int out_len = len / window_;
        if (out_len < 1) throw std::invalid_argument("MaxPool1d: input shorter than window");

        in_shape_ = input.shape;
        this->has_context_ = true;
        TensorT<S> out({b, c, out_len});
        argmax_.assign(out.numel(), 0);
        for (int n = 0; n < b; ++n) {
            for (int ch = 0; ch < c; ++ch) {
                const S* row = input.data.data() + (static_cast<std::size_t>(n) * c + ch) * len;
                std::size_t base = (static_cast<std::size_t>(n) * c + ch) * out_len;
                for (int p = 0; p < out_len; ++p) {
                    int best = p * window_;
                    for (int k = 1; k < window_; ++k)
                        if (row[p * window_ + k] > row[best]) best = p * window_ + k;
                    out.data[base + p] = row[best];
                    argmax_[base + p] = best;
                }
            }
        }
        return out;
    }

    TensorT<S> backward(const TensorT<S>& upstream) override {
        this->require_context("MaxPool1d");
        int b = in_shape_[0], c = in_shape_[1], len = in_shape_[2];
        int out_len = len / window_;
        require_shape(upstream, {b, c, out_len}, "MaxPool1d backward");

        TensorT<S> dx({b, c, len});
        for (int n = 0; n < b; ++n) {
            for (int ch = 0; ch < c; ++ch) {
                std::size_t base = (static_cast<std::size_t>(n) * c + ch) * out_len;
                S* dst = dx.data.data() + (static_cast<std::size_t>(n) * c + ch) * len;
                for (int p = 0; p < out_len; ++p) dst[argmax_[base + p]] += upstream.data[base + p];
            }
        }
        return dx;
    }

    std::string kind() const override { return "maxpool1d:" + std::to_string(window_); }

private:
    int window_;
    std::vector<int> in_shape_;
    std::vector<int> argmax_;
};

template <class S>
class ReluT : public LayerT<S> {
public:
    TensorT<S> forward(const TensorT<S>& input) override {
        input_ = input;
        this->has_context_ = true;
        TensorT<S> out = input;
        for (auto& v : out.data) v = std::max(v, S(0));
        return out;
    }

    TensorT<S> backward(const TensorT<S>& upstream) override {
        this->require_context("Relu");
        if (upstream.data.size() != input_.data.size())
            throw std::invalid_argument("Relu backward: size mismatch");
        TensorT<S> dx = upstream;
        for (std::size_t i = 0; i < dx.data.size(); ++i)
            if (input_.data[i] <= S(0)) dx.data[i] = S(0);
        return dx;
    }

    std::string kind() const override { return "relu"; }

private:
    TensorT<S> input_;
};

// (B, C, L) -> (B, C*L)
template <class S>
class FlattenT : public LayerT<S> {
public:
    TensorT<S> forward(const TensorT<S>& input) override {
        if (input.shape.empty()) throw std::invalid_argument("Flatten: scalar input");
        in_shape_ = input.shape;
        this->has_context_ = true;
        TensorT<S> out = input;
        int rest = 1;
        for (std::size_t i = 1; i < input.shape.size(); ++i) rest *= input.shape[i];
        out.shape = {input.shape[0], rest};
        return out;
    }

    TensorT<S> backward(const TensorT<S>& upstream) override {
        this->require_context("Flatten");
        TensorT<S> dx = upstream;
        dx.shape = in_shape_;
        return dx;
    }

    std::string kind() const override { return "flatten"; }

private:
    std::vector<int> in_shape_;
};

// y = x W^T + b over (B, in) input.
template <class S>
class LinearT : public LayerT<S> {
public:
    LinearT(int in_dim, int out_dim) : in_(in_dim), out_(out_dim) {
        if (in_dim < 1 || out_dim < 1) throw std::invalid_argument("Linear: bad dimensions");
        weight_ = TensorT<S>({out_dim, in_dim});
        bias_ = TensorT<S>({out_dim});
        weight_.alloc_grad();
        bias_.alloc_grad();
    }

    void init(Rng& rng) {
        double bound = std::sqrt(6.0 / in_);
        std::uniform_real_distribution<double> uni(-bound, bound);
        for (auto& w : weight_.data) w = static_cast<S>(uni(rng));
        std::fill(bias_.data.begin(), bias_.data.end(), S(0));
    }

    TensorT<S> forward(const TensorT<S>& input) override {
        if (input.shape.size() != 2 || input.shape[1] != in_)
            throw std::invalid_argument("Linear: expected (B," + std::to_string(in_) +
                                        ") input, got " + shape_str(input.shape));
        int b = input.shape[0];
        input_ = input;
        this->has_context_ = true;
        TensorT<S> out({b, out_});
        for (int n = 0; n < b; ++n) {
            const S* x = input.data.data() + static_cast<std::size_t>(n) * in_;
            for (int o = 0; o < out_; ++o) {
                const S* w = weight_.data.data() + static_cast<std::size_t>(o) * in_;
                S acc = bias_.data[static_cast<std::size_t>(o)];
                for (int i = 0; i < in_; ++i) acc += w[i] * x[i];
                out.data[static_cast<std::size_t>(n) * out_ + o] = acc;
            }
        }
        return out;
    }

    TensorT<S> backward(const TensorT<S>& upstream) override {
        this->require_context("Linear");
        int b = input_.shape[0];
        require_shape(upstream, {b, out_}, "Linear backward");

        TensorT<S> dx({b, in_});
        for (int n = 0; n < b; ++n) {
            const S* x = input_.data.data() + static_cast<std::size_t>(n) * in_;
            S* dxr = dx.data.data() + static_cast<std::size_t>(n) * in_;
            for (int o = 0; o < out_; ++o) {
                S up = upstream.data[static_cast<std::size_t>(n) * out_ + o];
                bias_.grad[static_cast<std::size_t>(o)] += up;
                const S* w = weight_.data.data() + static_cast<std::size_t>(o) * in_;
                S* dw = weight_.grad.data() + static_cast<std::size_t>(o) * in_;
                for (int i = 0; i < in_; ++i) {
                    dw[i] += up * x[i];
                    dxr[i] += up * w[i];
                }
            }
        }
        return dx;
    }

    std::vector<TensorT<S>*> params() override { return {&weight_, &bias_}; }
    std::string kind() const override {
        return "linear:" + std::to_string(in_) + ":" + std::to_string(out_);
    }

    TensorT<S>& weight() { return weight_; }
    TensorT<S>& bias() { return bias_; }

private:
    int in_, out_;
    TensorT<S> weight_, bias_, input_;
};

// Row-wise softmax with max-subtraction, over (B, C).
template <class S>
class SoftmaxT : public LayerT<S> {
public:
    TensorT<S> forward(const TensorT<S>& input) override {
        if (input.shape.size() != 2)
            throw std::invalid_argument("Softmax: expected (B,C) input, got " +
                                        shape_str(input.shape));
        int b = input.shape[0], c = input.shape[1];
        TensorT<S> out = input;
        for (int n = 0; n < b; ++n) {
            S* row = out.data.data() + static_cast<std::size_t>(n) * c;
            S mx = *std::max_element(row, row + c);
            S sum = S(0);
            for (int i = 0; i < c; ++i) {
                row[i] = std::exp(row[i] - mx);
                sum += row[i];
            }
            for (int i = 0; i < c; ++i) row[i] /= sum;
        }
        output_ = out;
        this->has_context_ = true;
        return out;
    }

    TensorT<S> backward(const TensorT<S>& upstream) override {
        this->require_context("Softmax");
        require_shape(upstream, output_.shape, "Softmax backward");
        int b = output_.shape[0], c = output_.shape[1];
        TensorT<S> dx(output_.shape);
        for (int n = 0; n < b; ++n) {
            const S* y = output_.data.data() + static_cast<std::size_t>(n) * c;
            const S* g = upstream.data.data() + static_cast<std::size_t>(n) * c;
            S dot = S(0);
            for (int i = 0; i < c; ++i) dot += y[i] * g[i];
            for (int i = 0; i < c; ++i)
                dx.data[static_cast<std::size_t>(n) * c + i] = y[i] * (g[i] - dot);
        }
        return dx;
    }

    std::string kind() const override { return "softmax"; }

private:
    TensorT<S> output_;
};

template <class S>
class SequentialT {
public:
    SequentialT() = default;

    template <class L, class... Args>
    L& emplace(Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        layers_.push_back(std::move(layer));
        return ref;
    }

    TensorT<S> forward(const TensorT<S>& input) {
        TensorT<S> x = input;
        for (auto& l : layers_) x = l->forward(x);
        return x;
    }

    TensorT<S> backward(const TensorT<S>& upstream) {
        TensorT<S> g = upstream;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
        return g;
    }

    std::vector<TensorT<S>*> params() {
        std::vector<TensorT<S>*> out;
        for (auto& l : layers_)
            for (auto* p : l->params()) out.push_back(p);
        return out;
    }

    void zero_grad() {
        for (auto* p : params()) p->zero_grad();
    }

    std::vector<std::unique_ptr<LayerT<S>>>& layers() { return layers_; }
    const std::vector<std::unique_ptr<LayerT<S>>>& layers() const { return layers_; }

private:
    std::vector<std::unique_ptr<LayerT<S>>> layers_;
};

// --- Loss ----------------------------------------------------------------

template <class S>
struct CeResult {
    S loss;
    TensorT<S> grad;  // d loss / d logits, already divided by batch size
};

// Mean cross-entropy over the batch; softmax folded in with log-sum-exp
// stabilization and a 1e-12 probability floor before the log.
template <class S>
CeResult<S> cross_entropy(const TensorT<S>& logits, const TensorT<S>& one_hot_targets) {
    if (logits.shape.size() != 2) throw std::invalid_argument("cross_entropy: logits must be (B,C)");
    require_shape(one_hot_targets, logits.shape, "cross_entropy targets");
    int b = logits.shape[0], c = logits.shape[1];

    for (int n = 0; n < b; ++n) {
        S row_sum = S(0);
        for (int i = 0; i < c; ++i) {
            S t = one_hot_targets.data[static_cast<std::size_t>(n) * c + i];
            if (t != S(0) && t != S(1))
                throw std::invalid_argument("cross_entropy: targets must be one-hot");
            row_sum += t;
        }
        if (row_sum != S(1)) throw std::invalid_argument("cross_entropy: targets must be one-hot");
    }

    CeResult<S> res;
    res.grad = TensorT<S>(logits.shape);
    double total = 0.0;
    for (int n = 0; n < b; ++n) {
        const S* z = logits.data.data() + static_cast<std::size_t>(n) * c;
        const S* t = one_hot_targets.data.data() + static_cast<std::size_t>(n) * c;
        S mx = *std::max_element(z, z + c);
        double lse = 0.0;
        for (int i = 0; i < c; ++i) lse += std::exp(static_cast<double>(z[i] - mx));
        double log_z = std::log(lse) + static_cast<double>(mx);
        for (int i = 0; i < c; ++i) {
            double p = std::exp(static_cast<double>(z[i]) - log_z);
            if (t[i] == S(1)) total -= std::log(std::max(p, 1e-12));
            res.grad.data[static_cast<std::size_t>(n) * c + i] =
                static_cast<S>((p - static_cast<double>(t[i])) / b);
        }
    }
    res.loss = static_cast<S>(total / b);
    return res;
}

// --- Optimizer -----------------------------------------------------------

// SGD with momentum: v <- mu*v + g; w <- w - lr*v.
template <class S>
class SgdT {
public:
    SgdT(std::vector<TensorT<S>*> params, double lr, double momentum)
        : params_(std::move(params)), lr_(lr), momentum_(momentum) {
        if (lr < 0) throw std::invalid_argument("sgd: lr must be >= 0");
        for (auto* p : params_) velocity_.emplace_back(p->data.size(), S(0));
    }

    void step() {
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& p = *params_[i];
            auto& v = velocity_[i];
            for (std::size_t j = 0; j < p.data.size(); ++j) {
                if (!std::isfinite(static_cast<double>(p.grad[j])))
                    throw std::runtime_error("sgd: non-finite gradient");
                v[j] = static_cast<S>(momentum_ * v[j] + p.grad[j]);
                p.data[j] = static_cast<S>(p.data[j] - lr_ * v[j]);
            }
        }
    }

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

private:
    std::vector<TensorT<S>*> params_;
    std::vector<std::vector<S>> velocity_;
    double lr_, momentum_;
};

using Sgd = SgdT<float>;

}  // namespace pridg::nn
