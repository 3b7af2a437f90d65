#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "l3ppi/gin.hpp"
#include "l3ppi/nn.hpp"
#include "l3ppi/rng.hpp"
#include "l3ppi/tensor.hpp"

namespace l3ppi {

// K+1 learnable prompt-node embeddings shared across all query pairs:
// row 0 is the hub node adjacent to v, rows 1..K are the branch nodes
// adjacent to u.
struct PromptBank {
    int path_budget = 0;  // K
    Tensor embeddings;    // (K+1, d)
};

PromptBank make_prompt_bank(int path_budget, int dim, Rng& init_rng);
PromptBank clone_prompt_bank(const PromptBank& bank);

// The K+3-node, 2K+1-edge pattern around a query pair.
// Node order: [u, v, p0, p1, ..., pK].
// Edge order: (u,p_i), (p_i,p0) for i = 1..K, then the shared edge (p0,v);
// weights follow the same order.
struct PromptPattern {
    WeightedGraph graph;
    int path_budget = 0;
};

PromptPattern build_initial_pattern(const Tensor& u_emb, const Tensor& v_emb,
                                    const PromptBank& bank);

// The K candidate length-3 paths; path_i keeps nodes {u, v, p0, p_i} with
// edges u-p_i, p_i-p0, p0-v and unit weights.
std::vector<WeightedGraph> decompose_paths(const PromptPattern& pattern);

// Small GIN + scalar sigmoid head scoring each candidate path.
struct GatingModel {
    GinLayers gin;
    Mlp head;
    int feature_dim = 0;
    int hidden = 0;
    double dropout = 0.0;
};

GatingModel make_gating(int feature_dim, const GinConfig& cfg, Rng& init_rng);
std::vector<Tensor> gating_parameters(const GatingModel& model);
GatingModel clone_gating(const GatingModel& model);

// Gate activation probabilities p in (0,1)^K, clamped to [1e-6, 1-1e-6].
Tensor gate_probs(const GatingModel& model, std::span<const WeightedGraph> paths,
                  const DropoutCtx* dropout_ctx = nullptr);

// Binary-concrete relaxation. Training draws two Gumbel noise terms per gate
// (U clamped to [1e-10, 1-1e-10]); pass a null rng to disable noise. At
// inference the gate is the hard threshold 1[p > 0.5] and carries no gradient.
Tensor gumbel_sigmoid(const Tensor& p, double tau, Rng* noise_rng, bool training);

// Writes gate values onto the pattern: edges (u,p_i) and (p_i,p0) take g_i;
// the shared edge (p0,v) takes max_i g_i so it stays active iff any path is.
PromptPattern assemble_final(const PromptPattern& pattern, const Tensor& gates);

// Gate state snapshot for reporting.
struct GateState {
    std::vector<double> probs;        // p
    std::vector<double> activations;  // g (relaxed or binary)
    double tau = 1.0;
};

// Frozen surrogate + prompt bank + gating network. use_gating stays false
// until the gating network has actually been trained; such models predict
// with every candidate path present.
struct PromptModel {
    SurrogateModel surrogate;
    PromptBank bank;
    GatingModel gating;
    bool use_gating = true;
};

struct PredictOptions {
    bool training = false;
    double tau = 1.0;
    Rng* gumbel_rng = nullptr;        // null = noise-free
    bool force_gates_open = false;    // stage-1 behavior: bypass the gate entirely
    const DropoutCtx* dropout_ctx = nullptr;
};

struct Prediction {
    Tensor output;  // (1, out_dim) probabilities
    Tensor probs;   // (K,1) gate probabilities; undefined when gates bypassed
    Tensor gates;   // (K,1) applied gate values
};

// build -> decompose -> gate -> assemble -> frozen surrogate.
Prediction predict(const PromptModel& model, const Tensor& u_emb, const Tensor& v_emb,
                   const PredictOptions& opts);

// Inference-mode count of activated paths, sum_i 1[p_i > 0.5].
int count_active_paths(const PromptModel& model, const Tensor& u_emb, const Tensor& v_emb);

}  // namespace l3ppi
