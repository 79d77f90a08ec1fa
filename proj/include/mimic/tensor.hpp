#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace mimic {

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Shape = std::vector<int>;

inline int64_t numel(const Shape& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
}

struct TensorImpl;
using ImplPtr = std::shared_ptr<TensorImpl>;

struct TensorImpl {
    Shape shape;
    std::vector<float> value;
    std::vector<float> grad;  // allocated on first use, same length as value
    bool requires_grad = false;
    std::string name;

    std::vector<ImplPtr> parents;
    std::function<void(TensorImpl&)> backward_fn;

    bool needs_grad() const { return requires_grad || !parents.empty(); }

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0f);
    }

    void accumulate(const float* g, size_t n) {
        ensure_grad();
        for (size_t i = 0; i < n; ++i) grad[i] += g[i];
    }
};

// Whether ops record the graph. Disabled during sampling/inference.
inline bool& grad_mode() {
    thread_local bool enabled = true;
    return enabled;
}

struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(grad_mode()) { grad_mode() = false; }
    ~NoGradGuard() { grad_mode() = prev; }
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(ImplPtr impl) : impl_(std::move(impl)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false, std::string name = "") {
        auto impl = std::make_shared<TensorImpl>();
        impl->value.assign(static_cast<size_t>(numel(shape)), 0.0f);
        impl->shape = std::move(shape);
        impl->requires_grad = requires_grad;
        impl->name = std::move(name);
        return Tensor(impl);
    }

    static Tensor from(Shape shape, std::vector<float> data, bool requires_grad = false,
                       std::string name = "") {
        if (static_cast<int64_t>(data.size()) != numel(shape))
            throw ShapeError("tensor: data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
        auto impl = std::make_shared<TensorImpl>();
        impl->shape = std::move(shape);
        impl->value = std::move(data);
        impl->requires_grad = requires_grad;
        impl->name = std::move(name);
        return Tensor(impl);
    }

    static Tensor scalar(float v) { return from({1}, {v}); }

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    int dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    int64_t size() const { return static_cast<int64_t>(impl_->value.size()); }
    std::vector<float>& value() const { return impl_->value; }
    std::vector<float>& grad() const {
        impl_->ensure_grad();
        return impl_->grad;
    }
    bool requires_grad() const { return impl_->requires_grad; }
    const std::string& name() const { return impl_->name; }
    void set_name(std::string n) { impl_->name = std::move(n); }
    void zero_grad() const {
        impl_->grad.assign(impl_->value.size(), 0.0f);
    }
    float item() const {
        if (size() != 1) throw ShapeError("item: tensor is not scalar " + shape_str(shape()));
        return impl_->value[0];
    }
    ImplPtr impl() const { return impl_; }

private:
    ImplPtr impl_;
};

namespace detail {

using MatrixRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatrixRM>;
using MapC = Eigen::Map<const MatrixRM>;

inline Tensor make_result(Shape shape, std::vector<ImplPtr> parents,
                          std::function<void(TensorImpl&)> backward) {
    auto impl = std::make_shared<TensorImpl>();
    impl->value.assign(static_cast<size_t>(numel(shape)), 0.0f);
    impl->shape = std::move(shape);
    bool track = false;
    if (grad_mode()) {
        for (const auto& p : parents)
            if (p->needs_grad()) track = true;
    }
    if (track) {
        impl->parents = std::move(parents);
        impl->backward_fn = std::move(backward);
    }
    return Tensor(impl);
}

inline void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise ops

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::check_same_shape("add", a, b);
    auto pa = a.impl(), pb = b.impl();
    Tensor out = detail::make_result(a.shape(), {pa, pb}, [pa, pb](TensorImpl& self) {
        if (pa->needs_grad()) pa->accumulate(self.grad.data(), self.grad.size());
        if (pb->needs_grad()) pb->accumulate(self.grad.data(), self.grad.size());
    });
    for (size_t i = 0; i < out.value().size(); ++i) out.value()[i] = pa->value[i] + pb->value[i];
    return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::check_same_shape("sub", a, b);
    auto pa = a.impl(), pb = b.impl();
    Tensor out = detail::make_result(a.shape(), {pa, pb}, [pa, pb](TensorImpl& self) {
        if (pa->needs_grad()) pa->accumulate(self.grad.data(), self.grad.size());
        if (pb->needs_grad()) {
            pb->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] -= self.grad[i];
        }
    });
    for (size_t i = 0; i < out.value().size(); ++i) out.value()[i] = pa->value[i] - pb->value[i];
    return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    detail::check_same_shape("mul", a, b);
    auto pa = a.impl(), pb = b.impl();
    Tensor out = detail::make_result(a.shape(), {pa, pb}, [pa, pb](TensorImpl& self) {
        if (pa->needs_grad()) {
            pa->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * pb->value[i];
        }
        if (pb->needs_grad()) {
            pb->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i] * pa->value[i];
        }
    });
    for (size_t i = 0; i < out.value().size(); ++i) out.value()[i] = pa->value[i] * pb->value[i];
    return out;
}

inline Tensor scale(const Tensor& a, float c) {
    auto pa = a.impl();
    Tensor out = detail::make_result(a.shape(), {pa}, [pa, c](TensorImpl& self) {
        if (!pa->needs_grad()) return;
        pa->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * c;
    });
    for (size_t i = 0; i < out.value().size(); ++i) out.value()[i] = pa->value[i] * c;
    return out;
}

inline Tensor add_scalar(const Tensor& a, float c) {
    auto pa = a.impl();
    Tensor out = detail::make_result(a.shape(), {pa}, [pa](TensorImpl& self) {
        if (pa->needs_grad()) pa->accumulate(self.grad.data(), self.grad.size());
    });
    for (size_t i = 0; i < out.value().size(); ++i) out.value()[i] = pa->value[i] + c;
    return out;
}

inline Tensor relu(const Tensor& a) {
    auto pa = a.impl();
    Tensor out = detail::make_result(a.shape(), {pa}, [pa](TensorImpl& self) {
        if (!pa->needs_grad()) return;
        pa->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
            if (pa->value[i] > 0.0f) pa->grad[i] += self.grad[i];
    });
    for (size_t i = 0; i < out.value().size(); ++i)
        out.value()[i] = pa->value[i] > 0.0f ? pa->value[i] : 0.0f;
    return out;
}

inline Tensor tanh_t(const Tensor& a) {
    auto pa = a.impl();
    Tensor out = detail::make_result(a.shape(), {pa}, [pa](TensorImpl& self) {
        if (!pa->needs_grad()) return;
        pa->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            const float y = self.value[i];
            pa->grad[i] += self.grad[i] * (1.0f - y * y);
        }
    });
    for (size_t i = 0; i < out.value().size(); ++i) out.value()[i] = std::tanh(pa->value[i]);
    return out;
}

inline Tensor exp_t(const Tensor& a) {
    auto pa = a.impl();
    Tensor out = detail::make_result(a.shape(), {pa}, [pa](TensorImpl& self) {
        if (!pa->needs_grad()) return;
        pa->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * self.value[i];
    });
    for (size_t i = 0; i < out.value().size(); ++i) out.value()[i] = std::exp(pa->value[i]);
    return out;
}

// ---------------------------------------------------------------------------
// shape ops

inline Tensor reshape(const Tensor& a, Shape new_shape) {
    if (numel(new_shape) != numel(a.shape()))
        throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                         shape_str(new_shape));
    auto pa = a.impl();
    Tensor out = detail::make_result(new_shape, {pa}, [pa](TensorImpl& self) {
        if (pa->needs_grad()) pa->accumulate(self.grad.data(), self.grad.size());
    });
    out.value() = pa->value;
    return out;
}

inline Tensor concat_lastdim(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("concat_lastdim: no inputs");
    Shape lead = parts[0].shape();
    lead.pop_back();
    int total = 0;
    std::vector<ImplPtr> impls;
    std::vector<int> widths;
    for (const auto& p : parts) {
        Shape l = p.shape();
        int w = l.back();
        l.pop_back();
        if (l != lead)
            throw ShapeError("concat_lastdim: leading dims differ: " + shape_str(parts[0].shape()) +
                             " vs " + shape_str(p.shape()));
        total += w;
        widths.push_back(w);
        impls.push_back(p.impl());
    }
    Shape out_shape = lead;
    out_shape.push_back(total);
    const int64_t rows = numel(lead);
    Tensor out = detail::make_result(
        out_shape, impls, [impls, widths, rows, total](TensorImpl& self) {
            int offset = 0;
            for (size_t k = 0; k < impls.size(); ++k) {
                const int w = widths[k];
                if (impls[k]->needs_grad()) {
                    impls[k]->ensure_grad();
                    for (int64_t r = 0; r < rows; ++r)
                        for (int j = 0; j < w; ++j)
                            impls[k]->grad[static_cast<size_t>(r) * w + j] +=
                                self.grad[static_cast<size_t>(r) * total + offset + j];
                }
                offset += w;
            }
        });
    int offset = 0;
    for (size_t k = 0; k < impls.size(); ++k) {
        const int w = widths[k];
        for (int64_t r = 0; r < rows; ++r)
            for (int j = 0; j < w; ++j)
                out.value()[static_cast<size_t>(r) * total + offset + j] =
                    impls[k]->value[static_cast<size_t>(r) * w + j];
        offset += w;
    }
    return out;
}

inline Tensor slice_lastdim(const Tensor& a, int begin, int end) {
    const int last = a.shape().back();
    if (begin < 0 || end > last || begin >= end)
        throw ShapeError("slice_lastdim: range [" + std::to_string(begin) + "," +
                         std::to_string(end) + ") invalid for width " + std::to_string(last));
    Shape out_shape = a.shape();
    out_shape.back() = end - begin;
    const int w = end - begin;
    Shape lead = a.shape();
    lead.pop_back();
    const int64_t rows = numel(lead);
    auto pa = a.impl();
    Tensor out =
        detail::make_result(out_shape, {pa}, [pa, begin, w, rows, last](TensorImpl& self) {
            if (!pa->needs_grad()) return;
            pa->ensure_grad();
            for (int64_t r = 0; r < rows; ++r)
                for (int j = 0; j < w; ++j)
                    pa->grad[static_cast<size_t>(r) * last + begin + j] +=
                        self.grad[static_cast<size_t>(r) * w + j];
        });
    for (int64_t r = 0; r < rows; ++r)
        for (int j = 0; j < w; ++j)
            out.value()[static_cast<size_t>(r) * w + j] =
                pa->value[static_cast<size_t>(r) * last + begin + j];
    return out;
}

// stack L tensors of shape [N, D] into [N, L, D]
inline Tensor stack_tokens(const std::vector<Tensor>& tokens) {
    if (tokens.empty()) throw ShapeError("stack_tokens: no inputs");
    const int n = tokens[0].dim(0), d = tokens[0].dim(1);
    std::vector<ImplPtr> impls;
    for (const auto& t : tokens) {
        if (t.rank() != 2 || t.dim(0) != n || t.dim(1) != d)
            throw ShapeError("stack_tokens: expected [" + std::to_string(n) + "," +
                             std::to_string(d) + "], got " + shape_str(t.shape()));
        impls.push_back(t.impl());
    }
    const int l = static_cast<int>(tokens.size());
    Tensor out = detail::make_result({n, l, d}, impls, [impls, n, l, d](TensorImpl& self) {
        for (int k = 0; k < l; ++k) {
            if (!impls[static_cast<size_t>(k)]->needs_grad()) continue;
            auto& p = *impls[static_cast<size_t>(k)];
            p.ensure_grad();
            for (int r = 0; r < n; ++r)
                for (int j = 0; j < d; ++j)
                    p.grad[static_cast<size_t>(r) * d + j] +=
                        self.grad[(static_cast<size_t>(r) * l + k) * d + j];
        }
    });
    for (int k = 0; k < l; ++k)
        for (int r = 0; r < n; ++r)
            for (int j = 0; j < d; ++j)
                out.value()[(static_cast<size_t>(r) * l + k) * d + j] =
                    impls[static_cast<size_t>(k)]->value[static_cast<size_t>(r) * d + j];
    return out;
}

// select token at index from [N, L, D] -> [N, D]
inline Tensor token_at(const Tensor& a, int idx) {
    if (a.rank() != 3) throw ShapeError("token_at: expected rank-3, got " + shape_str(a.shape()));
    const int n = a.dim(0), l = a.dim(1), d = a.dim(2);
    if (idx < 0 || idx >= l) throw ShapeError("token_at: index out of range");
    auto pa = a.impl();
    Tensor out = detail::make_result({n, d}, {pa}, [pa, n, l, d, idx](TensorImpl& self) {
        if (!pa->needs_grad()) return;
        pa->ensure_grad();
        for (int r = 0; r < n; ++r)
            for (int j = 0; j < d; ++j)
                pa->grad[(static_cast<size_t>(r) * l + idx) * d + j] +=
                    self.grad[static_cast<size_t>(r) * d + j];
    });
    for (int r = 0; r < n; ++r)
        for (int j = 0; j < d; ++j)
            out.value()[static_cast<size_t>(r) * d + j] =
                pa->value[(static_cast<size_t>(r) * l + idx) * d + j];
    return out;
}

// ---------------------------------------------------------------------------
// matmul family (Eigen-backed kernels)

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    auto pa = a.impl(), pb = b.impl();
    if (a.rank() == 2 && b.rank() == 2) {
        const int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
        if (k != k2)
            throw ShapeError("matmul: inner dims differ " + shape_str(a.shape()) + " x " +
                             shape_str(b.shape()));
        Tensor out = detail::make_result({m, n}, {pa, pb}, [pa, pb, m, k, n](TensorImpl& self) {
            detail::MapC dC(self.grad.data(), m, n);
            if (pa->needs_grad()) {
                pa->ensure_grad();
                detail::MapM dA(pa->grad.data(), m, k);
                detail::MapC B(pb->value.data(), k, n);
                dA.noalias() += dC * B.transpose();
            }
            if (pb->needs_grad()) {
                pb->ensure_grad();
                detail::MapM dB(pb->grad.data(), k, n);
                detail::MapC A(pa->value.data(), m, k);
                dB.noalias() += A.transpose() * dC;
            }
        });
        detail::MapC A(pa->value.data(), m, k);
        detail::MapC B(pb->value.data(), k, n);
        detail::MapM C(out.value().data(), m, n);
        C.noalias() = A * B;
        return out;
    }
    if (a.rank() == 3 && b.rank() == 3) {
        const int bsz = a.dim(0), m = a.dim(1), k = a.dim(2);
        if (b.dim(0) != bsz || b.dim(1) != k)
            throw ShapeError("matmul(batched): shape mismatch " + shape_str(a.shape()) + " x " +
                             shape_str(b.shape()));
        const int n = b.dim(2);
        Tensor out =
            detail::make_result({bsz, m, n}, {pa, pb}, [pa, pb, bsz, m, k, n](TensorImpl& self) {
                for (int i = 0; i < bsz; ++i) {
                    detail::MapC dC(self.grad.data() + static_cast<size_t>(i) * m * n, m, n);
                    if (pa->needs_grad()) {
                        pa->ensure_grad();
                        detail::MapM dA(pa->grad.data() + static_cast<size_t>(i) * m * k, m, k);
                        detail::MapC B(pb->value.data() + static_cast<size_t>(i) * k * n, k, n);
                        dA.noalias() += dC * B.transpose();
                    }
                    if (pb->needs_grad()) {
                        pb->ensure_grad();
                        detail::MapM dB(pb->grad.data() + static_cast<size_t>(i) * k * n, k, n);
                        detail::MapC A(pa->value.data() + static_cast<size_t>(i) * m * k, m, k);
                        dB.noalias() += A.transpose() * dC;
                    }
                }
            });
        for (int i = 0; i < bsz; ++i) {
            detail::MapC A(pa->value.data() + static_cast<size_t>(i) * m * k, m, k);
            detail::MapC B(pb->value.data() + static_cast<size_t>(i) * k * n, k, n);
            detail::MapM C(out.value().data() + static_cast<size_t>(i) * m * n, m, n);
            C.noalias() = A * B;
        }
        return out;
    }
    throw ShapeError("matmul: unsupported ranks " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
}

// batched C = A * B^T with A [b,m,k], B [b,n,k] -> [b,m,n]
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2))
        throw ShapeError("matmul_nt: shape mismatch " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    const int bsz = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(1);
    auto pa = a.impl(), pb = b.impl();
    Tensor out =
        detail::make_result({bsz, m, n}, {pa, pb}, [pa, pb, bsz, m, k, n](TensorImpl& self) {
            for (int i = 0; i < bsz; ++i) {
                detail::MapC dC(self.grad.data() + static_cast<size_t>(i) * m * n, m, n);
                if (pa->needs_grad()) {
                    pa->ensure_grad();
                    detail::MapM dA(pa->grad.data() + static_cast<size_t>(i) * m * k, m, k);
                    detail::MapC B(pb->value.data() + static_cast<size_t>(i) * n * k, n, k);
                    dA.noalias() += dC * B;
                }
                if (pb->needs_grad()) {
                    pb->ensure_grad();
                    detail::MapM dB(pb->grad.data() + static_cast<size_t>(i) * n * k, n, k);
                    detail::MapC A(pa->value.data() + static_cast<size_t>(i) * m * k, m, k);
                    dB.noalias() += dC.transpose() * A;
                }
            }
        });
    for (int i = 0; i < bsz; ++i) {
        detail::MapC A(pa->value.data() + static_cast<size_t>(i) * m * k, m, k);
        detail::MapC B(pb->value.data() + static_cast<size_t>(i) * n * k, n, k);
        detail::MapM C(out.value().data() + static_cast<size_t>(i) * m * n, m, n);
        C.noalias() = A * B.transpose();
    }
    return out;
}

// x [..., n] + b [n], broadcast over leading dims (the only broadcast allowed)
inline Tensor add_bias(const Tensor& x, const Tensor& bias) {
    if (bias.rank() != 1 || bias.dim(0) != x.shape().back())
        throw ShapeError("add_bias: bias " + shape_str(bias.shape()) + " does not match last dim of " +
                         shape_str(x.shape()));
    const int n = bias.dim(0);
    const int64_t rows = numel(x.shape()) / n;
    auto px = x.impl(), pb = bias.impl();
    Tensor out = detail::make_result(x.shape(), {px, pb}, [px, pb, rows, n](TensorImpl& self) {
        if (px->needs_grad()) px->accumulate(self.grad.data(), self.grad.size());
        if (pb->needs_grad()) {
            pb->ensure_grad();
            for (int64_t r = 0; r < rows; ++r)
                for (int j = 0; j < n; ++j) pb->grad[j] += self.grad[static_cast<size_t>(r) * n + j];
        }
    });
    for (int64_t r = 0; r < rows; ++r)
        for (int j = 0; j < n; ++j)
            out.value()[static_cast<size_t>(r) * n + j] =
                px->value[static_cast<size_t>(r) * n + j] + pb->value[j];
    return out;
}

// ---------------------------------------------------------------------------
// reductions and normalizations

inline Tensor sum_all(const Tensor& a) {
    auto pa = a.impl();
    Tensor out = detail::make_result({1}, {pa}, [pa](TensorImpl& self) {
        if (!pa->needs_grad()) return;
        pa->ensure_grad();
        const float g = self.grad[0];
        for (float& v : pa->grad) v += g;
    });
    double acc = 0.0;  // 64-bit accumulation
    for (float v : pa->value) acc += v;
    out.value()[0] = static_cast<float>(acc);
    return out;
}

inline Tensor mean_all(const Tensor& a) { return scale(sum_all(a), 1.0f / static_cast<float>(a.size())); }

inline Tensor softmax_lastdim(const Tensor& a) {
    const int n = a.shape().back();
    const int64_t rows = numel(a.shape()) / n;
    auto pa = a.impl();
    Tensor out = detail::make_result(a.shape(), {pa}, [pa, rows, n](TensorImpl& self) {
        if (!pa->needs_grad()) return;
        pa->ensure_grad();
        for (int64_t r = 0; r < rows; ++r) {
            const size_t off = static_cast<size_t>(r) * n;
            double dot = 0.0;
            for (int j = 0; j < n; ++j) dot += static_cast<double>(self.grad[off + j]) * self.value[off + j];
            for (int j = 0; j < n; ++j)
                pa->grad[off + j] +=
                    self.value[off + j] * (self.grad[off + j] - static_cast<float>(dot));
        }
    });
    for (int64_t r = 0; r < rows; ++r) {
        const size_t off = static_cast<size_t>(r) * n;
        float mx = pa->value[off];
        for (int j = 1; j < n; ++j) mx = std::max(mx, pa->value[off + j]);
        double denom = 0.0;
        for (int j = 0; j < n; ++j) denom += std::exp(static_cast<double>(pa->value[off + j] - mx));
        for (int j = 0; j < n; ++j)
            out.value()[off + j] =
                static_cast<float>(std::exp(static_cast<double>(pa->value[off + j] - mx)) / denom);
    }
    return out;
}

// y = gain * (x - mean)/sqrt(var + eps) + bias over the last dim
inline Tensor layernorm_lastdim(const Tensor& x, const Tensor& gain, const Tensor& bias,
                                float eps = 1e-5f) {
    const int n = x.shape().back();
    if (gain.rank() != 1 || gain.dim(0) != n || bias.rank() != 1 || bias.dim(0) != n)
        throw ShapeError("layernorm: gain/bias must be [" + std::to_string(n) + "]");
    const int64_t rows = numel(x.shape()) / n;
    auto px = x.impl(), pg = gain.impl(), pb = bias.impl();
    // stash per-row inv_std and normalized values for the backward pass
    auto xhat = std::make_shared<std::vector<float>>(static_cast<size_t>(rows) * n);
    auto inv_std = std::make_shared<std::vector<float>>(static_cast<size_t>(rows));
    Tensor out = detail::make_result(
        x.shape(), {px, pg, pb}, [px, pg, pb, xhat, inv_std, rows, n](TensorImpl& self) {
            for (int64_t r = 0; r < rows; ++r) {
                const size_t off = static_cast<size_t>(r) * n;
                const double istd = (*inv_std)[static_cast<size_t>(r)];
                double sum_gdy = 0.0, sum_gdy_xhat = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double gdy =
                        static_cast<double>(self.grad[off + j]) * pg->value[j];
                    sum_gdy += gdy;
                    sum_gdy_xhat += gdy * (*xhat)[off + j];
                }
                if (px->needs_grad()) {
                    px->ensure_grad();
                    const double m1 = sum_gdy / n;
                    const double m2 = sum_gdy_xhat / n;
                    for (int j = 0; j < n; ++j) {
                        const double gdy =
                            static_cast<double>(self.grad[off + j]) * pg->value[j];
                        px->grad[off + j] += static_cast<float>(
                            istd * (gdy - m1 - (*xhat)[off + j] * m2));
                    }
                }
                if (pg->needs_grad()) {
                    pg->ensure_grad();
                    for (int j = 0; j < n; ++j)
                        pg->grad[j] += self.grad[off + j] * (*xhat)[off + j];
                }
                if (pb->needs_grad()) {
                    pb->ensure_grad();
                    for (int j = 0; j < n; ++j) pb->grad[j] += self.grad[off + j];
                }
            }
        });
    for (int64_t r = 0; r < rows; ++r) {
        const size_t off = static_cast<size_t>(r) * n;
        double mean = 0.0;
        for (int j = 0; j < n; ++j) mean += px->value[off + j];
        mean /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) {
            const double d = px->value[off + j] - mean;
            var += d * d;
        }
        var /= n;
        const float istd = static_cast<float>(1.0 / std::sqrt(var + eps));
        (*inv_std)[static_cast<size_t>(r)] = istd;
        for (int j = 0; j < n; ++j) {
            const float xh = (static_cast<float>(px->value[off + j] - mean)) * istd;
            (*xhat)[off + j] = xh;
            out.value()[off + j] = pg->value[j] * xh + pb->value[j];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// backward

inline void backward(const Tensor& loss) {
    if (loss.size() != 1)
        throw ShapeError("backward: loss must be scalar, got " + shape_str(loss.shape()));
    // iterative post-order topological sort
    std::vector<TensorImpl*> order;
    std::unordered_set<TensorImpl*> visited;
    std::vector<std::pair<TensorImpl*, size_t>> stack;
    stack.emplace_back(loss.impl().get(), 0);
    visited.insert(loss.impl().get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            TensorImpl* p = node->parents[idx++].get();
            if (!visited.count(p) && !p->parents.empty()) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    // interior-node grads are per-pass scratch; only leaf grads accumulate
    // across repeated backward calls
    for (TensorImpl* node : order) node->grad.assign(node->value.size(), 0.0f);
    loss.impl()->ensure_grad();
    loss.impl()->grad[0] += 1.0f;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorImpl* node = *it;
        if (node->backward_fn) {
            node->ensure_grad();
            node->backward_fn(*node);
        }
    }
}

}  // namespace mimic
