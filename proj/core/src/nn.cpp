#include "l3ppi/nn.hpp"

#include <cmath>

#include "l3ppi/errors.hpp"

namespace l3ppi {

LinearLayer make_linear(int in, int out, Rng& init_rng) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(in + out)));
    std::vector<double> w(static_cast<std::size_t>(in) * static_cast<std::size_t>(out));
    for (double& x : w) x = dist(init_rng);
    LinearLayer layer;
    layer.weight = Tensor::from_data({in, out}, std::move(w), true);
    layer.bias = Tensor::zeros({1, out}, true);
    return layer;
}

Tensor linear(const LinearLayer& layer, const Tensor& x) {
    return add(matmul(x, layer.weight), layer.bias);
}

Tensor dropout(const Tensor& x, const DropoutCtx* ctx) {
    if (!ctx || !ctx->training || ctx->rate <= 0.0) return x;
    if (!ctx->rng) throw ComputeError("dropout: missing rng stream");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep = 1.0 - ctx->rate;
    std::vector<double> mask(x.size());
    for (double& m : mask) m = (u(*ctx->rng) >= ctx->rate) ? 1.0 / keep : 0.0;
    return mul(x, Tensor::from_data(x.shape(), std::move(mask)));
}

Mlp make_mlp(int in, std::span<const int> widths, Rng& init_rng) {
    Mlp mlp;
    int cur = in;
    for (int w : widths) {
        mlp.layers.push_back(make_linear(cur, w, init_rng));
        cur = w;
    }
    return mlp;
}

Tensor mlp_forward(const Mlp& mlp, const Tensor& x, const DropoutCtx* dropout_ctx) {
    Tensor h = x;
    for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
        h = linear(mlp.layers[i], h);
        if (i + 1 < mlp.layers.size()) {
            h = relu(h);
            h = dropout(h, dropout_ctx);
        }
    }
    return h;
}

void collect_parameters(const Mlp& mlp, std::vector<Tensor>& out) {
    for (const LinearLayer& layer : mlp.layers) {
        out.push_back(layer.weight);
        out.push_back(layer.bias);
    }
}

Mlp clone_mlp(const Mlp& mlp) {
    Mlp copy;
    copy.layers.reserve(mlp.layers.size());
    for (const LinearLayer& layer : mlp.layers)
        copy.layers.push_back(
            {layer.weight.detached_copy(true), layer.bias.detached_copy(true)});
    return copy;
}

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Tensor& p : params_) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void Adam::step() {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Tensor& p = params_[pi];
        if (!p.has_grad())
            throw ComputeError("adam: parameter " + std::to_string(pi) + " has no gradient");
        auto g = p.grad();
        auto data = p.mutable_data();
        auto& m = m_[pi];
        auto& v = v_[pi];
        for (std::size_t i = 0; i < data.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

void Adam::zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
}

}  // namespace l3ppi
