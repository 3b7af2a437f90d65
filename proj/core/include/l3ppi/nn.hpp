#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "l3ppi/rng.hpp"
#include "l3ppi/tensor.hpp"

namespace l3ppi {

struct LinearLayer {
    Tensor weight;  // (in, out)
    Tensor bias;    // (1, out)
};

// Glorot-normal weights, zero bias.
LinearLayer make_linear(int in, int out, Rng& init_rng);
Tensor linear(const LinearLayer& layer, const Tensor& x);  // x (n,in) -> (n,out)

// Inverted-dropout context; a null context (or training=false) is a no-op.
struct DropoutCtx {
    double rate = 0.0;
    Rng* rng = nullptr;
    bool training = false;
};

Tensor dropout(const Tensor& x, const DropoutCtx* ctx);

// Dense stack with ReLU between layers (activation never applied after the
// last layer). Dropout, when active, follows each hidden activation.
struct Mlp {
    std::vector<LinearLayer> layers;
};

Mlp make_mlp(int in, std::span<const int> widths, Rng& init_rng);
Tensor mlp_forward(const Mlp& mlp, const Tensor& x, const DropoutCtx* dropout_ctx = nullptr);
void collect_parameters(const Mlp& mlp, std::vector<Tensor>& out);
Mlp clone_mlp(const Mlp& mlp);  // deep copy of parameter values

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter set.
class Adam {
  public:
    Adam(std::vector<Tensor> params, AdamConfig cfg);

    // Applies one update from the accumulated grads; ComputeError when a
    // parameter has no grad buffer.
    void step();
    void zero_grad();
    std::int64_t steps() const { return step_; }
    const std::vector<Tensor>& params() const { return params_; }

  private:
    std::vector<Tensor> params_;
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    std::int64_t step_ = 0;
};

}  // namespace l3ppi
