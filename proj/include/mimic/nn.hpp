#pragma once

#include "mimic/rng.hpp"
#include "mimic/tensor.hpp"

#include <string>
#include <vector>

namespace mimic {

struct ParamRef {
    std::string name;
    Tensor tensor;
};

using ParamList = std::vector<ParamRef>;

inline Tensor xavier_uniform(int fan_in, int fan_out, Rng& rng, std::string name) {
    const float limit = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
    Tensor w = Tensor::zeros({fan_in, fan_out}, true, name);
    rng.fill_uniform(w.value(), -limit, limit);
    return w;
}

class Linear {
public:
    Linear() = default;
    Linear(int in, int out, Rng& rng, const std::string& name)
        : weight_(xavier_uniform(in, out, rng, name + "/W")),
          bias_(Tensor::zeros({out}, true, name + "/b")),
          in_(in),
          out_(out) {}

    Tensor operator()(const Tensor& x) const {
        if (x.shape().back() != in_)
            throw ShapeError("linear " + weight_.name() + ": input width " +
                             std::to_string(x.shape().back()) + " != " + std::to_string(in_));
        if (x.rank() == 2) return add_bias(matmul(x, weight_), bias_);
        // rank-3 token input: fold leading dims
        Shape s = x.shape();
        Tensor flat = reshape(x, {static_cast<int>(numel(s) / in_), in_});
        Tensor y = add_bias(matmul(flat, weight_), bias_);
        s.back() = out_;
        return reshape(y, s);
    }

    void collect(ParamList& out) const {
        out.push_back({weight_.name(), weight_});
        out.push_back({bias_.name(), bias_});
    }

    int in_dim() const { return in_; }
    int out_dim() const { return out_; }

private:
    Tensor weight_, bias_;
    int in_ = 0, out_ = 0;
};

// 2-layer MLP with ReLU
class Mlp2 {
public:
    Mlp2() = default;
    Mlp2(int in, int hidden, int out, Rng& rng, const std::string& name)
        : l1_(in, hidden, rng, name + "/l1"), l2_(hidden, out, rng, name + "/l2") {}

    Tensor operator()(const Tensor& x) const { return l2_(relu(l1_(x))); }

    void collect(ParamList& out) const {
        l1_.collect(out);
        l2_.collect(out);
    }

private:
    Linear l1_, l2_;
};

class LayerNorm {
public:
    LayerNorm() = default;
    LayerNorm(int width, const std::string& name)
        : gain_(Tensor::zeros({width}, true, name + "/g")),
          bias_(Tensor::zeros({width}, true, name + "/b")) {
        for (float& v : gain_.value()) v = 1.0f;
    }

    Tensor operator()(const Tensor& x) const { return layernorm_lastdim(x, gain_, bias_); }

    void collect(ParamList& out) const {
        out.push_back({gain_.name(), gain_});
        out.push_back({bias_.name(), bias_});
    }

private:
    Tensor gain_, bias_;
};

// Pre-LN transformer block: x + MHA(LN(x)); x + FFN(LN(x)).
class TransformerBlock {
public:
    TransformerBlock() = default;
    TransformerBlock(int width, int heads, int ffn_hidden, Rng& rng, const std::string& name)
        : ln1_(width, name + "/ln1"),
          ln2_(width, name + "/ln2"),
          wq_(width, width, rng, name + "/wq"),
          wk_(width, width, rng, name + "/wk"),
          wv_(width, width, rng, name + "/wv"),
          wo_(width, width, rng, name + "/wo"),
          f1_(width, ffn_hidden, rng, name + "/f1"),
          f2_(ffn_hidden, width, rng, name + "/f2"),
          heads_(heads),
          width_(width) {
        if (width % heads != 0) throw ShapeError("transformer: width must divide heads");
    }

    // x: [N, L, width]
    Tensor operator()(const Tensor& x) const {
        Tensor h = ln1_(x);
        Tensor q = wq_(h), k = wk_(h), v = wv_(h);
        const int dh = width_ / heads_;
        const float inv_sqrt_dh = 1.0f / std::sqrt(static_cast<float>(dh));
        std::vector<Tensor> head_outs;
        head_outs.reserve(static_cast<size_t>(heads_));
        for (int hd = 0; hd < heads_; ++hd) {
            Tensor qh = slice_lastdim(q, hd * dh, (hd + 1) * dh);
            Tensor kh = slice_lastdim(k, hd * dh, (hd + 1) * dh);
            Tensor vh = slice_lastdim(v, hd * dh, (hd + 1) * dh);
            Tensor att = softmax_lastdim(scale(matmul_nt(qh, kh), inv_sqrt_dh));
            head_outs.push_back(matmul(att, vh));
        }
        Tensor attn = wo_(concat_lastdim(head_outs));
        Tensor y = add(x, attn);
        Tensor ff = f2_(relu(f1_(ln2_(y))));
        return add(y, ff);
    }

    void collect(ParamList& out) const {
        ln1_.collect(out);
        ln2_.collect(out);
        wq_.collect(out);
        wk_.collect(out);
        wv_.collect(out);
        wo_.collect(out);
        f1_.collect(out);
        f2_.collect(out);
    }

private:
    LayerNorm ln1_, ln2_;
    Linear wq_, wk_, wv_, wo_, f1_, f2_;
    int heads_ = 0, width_ = 0;
};

// Fixed sinusoidal encoding of an integer timestep into `width` features.
inline std::vector<float> sinusoidal_encoding(int t, int width) {
    std::vector<float> out(static_cast<size_t>(width));
    const int half = width / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::pow(10000.0, -2.0 * i / width);
        out[static_cast<size_t>(i)] = static_cast<float>(std::sin(t * freq));
        out[static_cast<size_t>(half + i)] = static_cast<float>(std::cos(t * freq));
    }
    return out;
}

}  // namespace mimic
