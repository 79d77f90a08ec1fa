#pragma once

// Gradient checker: analytic gradients from mimic::backward vs central finite
// differences (h = 1e-3) of an independent double-precision oracle, elementwise
// tolerance max(1e-6, 1e-4 * |g|). Elements whose perturbation flips a ReLU
// activation pattern are skipped (the finite difference itself is invalid at a
// kink).

#include "fd_oracle.hpp"

#include "mimic/rng.hpp"
#include "mimic/tensor.hpp"

#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace gradcheck {

struct Result {
    bool ok = true;
    int checked = 0;
    int skipped = 0;
    double max_err = 0.0;
    std::string detail;
};

using LeafValues = std::vector<oracle::Vec>;
// oracle forward: returns loss; appends relu input signs to mask when non-null
using OracleFn = std::function<double(const LeafValues&, std::vector<int>*)>;

struct Instance {
    std::vector<mimic::Tensor> leaves;
    mimic::Tensor loss;
    OracleFn oracle_fn;
};

inline oracle::Vec to_double(const std::vector<float>& v) {
    return oracle::Vec(v.begin(), v.end());
}

inline oracle::Vec relu_masked(oracle::Vec x, std::vector<int>* mask) {
    if (mask)
        for (double v : x) mask->push_back(v > 0.0 ? 1 : 0);
    return oracle::relu(std::move(x));
}

inline mimic::Tensor make_leaf(mimic::Shape shape, mimic::Rng& rng, float scale = 0.8f) {
    mimic::Tensor t = mimic::Tensor::zeros(shape, true);
    rng.fill_uniform(t.value(), -scale, scale);
    return t;
}

// template 0: two-layer MLP, rank-2 (matmul, add_bias, relu, tanh, scale, sum)
inline Instance build_mlp(mimic::Rng& rng) {
    const int m = 2 + static_cast<int>(rng.below(3));
    const int k = 2 + static_cast<int>(rng.below(4));
    const int h = 3 + static_cast<int>(rng.below(5));
    const int p = 1 + static_cast<int>(rng.below(3));
    Instance inst;
    inst.leaves = {make_leaf({m, k}, rng), make_leaf({k, h}, rng), make_leaf({h}, rng),
                   make_leaf({h, p}, rng), make_leaf({p}, rng)};
    auto& L = inst.leaves;
    mimic::Tensor hid = mimic::relu(mimic::add_bias(mimic::matmul(L[0], L[1]), L[2]));
    mimic::Tensor y = mimic::tanh_t(mimic::add_bias(mimic::matmul(hid, L[3]), L[4]));
    inst.loss = mimic::mean_all(mimic::mul(y, y));
    inst.oracle_fn = [m, k, h, p](const LeafValues& v, std::vector<int>* mask) {
        oracle::Vec hid_o = relu_masked(oracle::add_bias(oracle::matmul2d(v[0], v[1], m, k, h), v[2], h), mask);
        oracle::Vec y_o = oracle::tanh_v(oracle::add_bias(oracle::matmul2d(hid_o, v[3], m, h, p), v[4], p));
        return oracle::sum(oracle::mul(y_o, y_o)) / (m * p);
    };
    return inst;
}

// template 1: single-head attention (matmul_nt, scale, softmax, batched matmul, add, mul)
inline Instance build_attention(mimic::Rng& rng) {
    const int b = 1 + static_cast<int>(rng.below(2));
    const int t = 2 + static_cast<int>(rng.below(3));
    const int d = 2 + static_cast<int>(rng.below(4));
    Instance inst;
    inst.leaves = {make_leaf({b, t, d}, rng), make_leaf({b, t, d}, rng), make_leaf({b, t, d}, rng)};
    auto& L = inst.leaves;
    const float sc = 1.0f / std::sqrt(static_cast<float>(d));
    mimic::Tensor att = mimic::softmax_lastdim(mimic::scale(mimic::matmul_nt(L[0], L[1]), sc));
    mimic::Tensor y = mimic::add(L[2], mimic::matmul(att, L[2]));
    inst.loss = mimic::sum_all(mimic::mul(y, y));
    inst.oracle_fn = [b, t, d, sc](const LeafValues& v, std::vector<int>*) {
        oracle::Vec att_o = oracle::softmax_rows(oracle::scale(oracle::matmul_nt_batched(v[0], v[1], b, t, d, t), sc), t);
        oracle::Vec y_o = oracle::add(v[2], oracle::matmul_batched(att_o, v[2], b, t, t, d));
        return oracle::sum(oracle::mul(y_o, y_o));
    };
    return inst;
}

// template 2: elementwise chain (mul, add, sub, scale, exp, concat, slice, tanh)
inline Instance build_elementwise(mimic::Rng& rng) {
    const int m = 2 + static_cast<int>(rng.below(3));
    const int n = 2 + static_cast<int>(rng.below(4));
    Instance inst;
    inst.leaves = {make_leaf({m, n}, rng), make_leaf({m, n}, rng)};
    auto& L = inst.leaves;
    mimic::Tensor c = mimic::mul(L[0], L[1]);
    mimic::Tensor e = mimic::sub(mimic::add(c, L[0]), L[1]);
    mimic::Tensor f = mimic::exp_t(mimic::scale(e, 0.3f));
    mimic::Tensor g = mimic::concat_lastdim({f, c});
    mimic::Tensor s = mimic::slice_lastdim(g, 1, n + 1);
    inst.loss = mimic::sum_all(mimic::tanh_t(s));
    inst.oracle_fn = [n](const LeafValues& v, std::vector<int>*) {
        oracle::Vec c_o = oracle::mul(v[0], v[1]);
        oracle::Vec e_o = oracle::sub(oracle::add(c_o, v[0]), v[1]);
        oracle::Vec f_o = oracle::exp_v(oracle::scale(e_o, 0.3));
        // concat along last dim then slice [1, n+1)
        const size_t rows = v[0].size() / static_cast<size_t>(n);
        oracle::Vec s_o;
        for (size_t r = 0; r < rows; ++r) {
            for (int j = 1; j < n; ++j) s_o.push_back(f_o[r * n + j]);
            s_o.push_back(c_o[r * n + 0]);
        }
        return oracle::sum(oracle::tanh_v(s_o));
    };
    return inst;
}

// template 3: token stack + layernorm + head (stack_tokens, layernorm, token_at,
// matmul, add_bias, relu, sum)
inline Instance build_tokens(mimic::Rng& rng) {
    const int n = 2 + static_cast<int>(rng.below(2));
    const int d = 3 + static_cast<int>(rng.below(4));
    const int p = 1 + static_cast<int>(rng.below(3));
    Instance inst;
    inst.leaves = {make_leaf({n, d}, rng), make_leaf({n, d}, rng), make_leaf({n, d}, rng),
                   make_leaf({d}, rng),    make_leaf({d}, rng),    make_leaf({d, p}, rng),
                   make_leaf({p}, rng)};
    // keep every layernorm row well away from zero variance: a near-constant
    // row makes 1/sqrt(var+eps) ill-conditioned and finite differences invalid
    for (int k = 0; k < 3; ++k)
        for (int r = 0; r < n; ++r)
            for (int j = 0; j < d; ++j)
                inst.leaves[static_cast<size_t>(k)].value()[static_cast<size_t>(r) * d + j] +=
                    -0.9f + 1.8f * static_cast<float>(j) / static_cast<float>(d - 1);
    auto& L = inst.leaves;
    mimic::Tensor st = mimic::stack_tokens({L[0], L[1], L[2]});
    mimic::Tensor ln = mimic::layernorm_lastdim(st, L[3], L[4]);
    mimic::Tensor tok = mimic::token_at(ln, 1);
    mimic::Tensor z = mimic::relu(mimic::add_bias(mimic::matmul(tok, L[5]), L[6]));
    inst.loss = mimic::sum_all(z);
    inst.oracle_fn = [n, d, p](const LeafValues& v, std::vector<int>* mask) {
        oracle::Vec st_o(static_cast<size_t>(n) * 3 * d);
        for (int r = 0; r < n; ++r)
            for (int k = 0; k < 3; ++k)
                for (int j = 0; j < d; ++j)
                    st_o[(static_cast<size_t>(r) * 3 + k) * d + j] = v[static_cast<size_t>(k)][static_cast<size_t>(r) * d + j];
        oracle::Vec ln_o = oracle::layernorm_rows(st_o, v[3], v[4], d);
        oracle::Vec tok_o(static_cast<size_t>(n) * d);
        for (int r = 0; r < n; ++r)
            for (int j = 0; j < d; ++j) tok_o[static_cast<size_t>(r) * d + j] = ln_o[(static_cast<size_t>(r) * 3 + 1) * d + j];
        oracle::Vec z_o = relu_masked(oracle::add_bias(oracle::matmul2d(tok_o, v[5], n, d, p), v[6], p), mask);
        return oracle::sum(z_o);
    };
    return inst;
}

inline Instance build_instance(int which, mimic::Rng& rng) {
    switch (which % 4) {
        case 0: return build_mlp(rng);
        case 1: return build_attention(rng);
        case 2: return build_elementwise(rng);
        default: return build_tokens(rng);
    }
}

inline Result check_instance(int which, uint64_t seed, double h = 1e-3) {
    mimic::Rng rng(seed);
    Instance inst = build_instance(which, rng);
    mimic::backward(inst.loss);

    LeafValues base;
    for (const auto& l : inst.leaves) base.push_back(to_double(l.value()));
    std::vector<int> mask0;
    inst.oracle_fn(base, &mask0);

    Result res;
    for (size_t li = 0; li < inst.leaves.size(); ++li) {
        const auto& analytic = inst.leaves[li].grad();
        for (size_t j = 0; j < base[li].size(); ++j) {
            LeafValues pert = base;
            pert[li][j] += h;
            std::vector<int> mask_p;
            const double fp = inst.oracle_fn(pert, &mask_p);
            pert[li][j] -= 2 * h;
            std::vector<int> mask_m;
            const double fm = inst.oracle_fn(pert, &mask_m);
            if (mask_p != mask0 || mask_m != mask0) {
                ++res.skipped;
                continue;
            }
            const double fd = (fp - fm) / (2 * h);
            const double err = std::abs(static_cast<double>(analytic[j]) - fd);
            const double tol = std::max(1e-6, 1e-4 * std::abs(fd));
            ++res.checked;
            res.max_err = std::max(res.max_err, err);
            if (err > tol) {
                res.ok = false;
                std::ostringstream os;
                os << "template " << which % 4 << " seed " << seed << " leaf " << li << " elem "
                   << j << ": analytic " << analytic[j] << " vs fd " << fd << " (err " << err
                   << ", tol " << tol << ")";
                res.detail = os.str();
                return res;
            }
        }
    }
    return res;
}

}  // namespace gradcheck
