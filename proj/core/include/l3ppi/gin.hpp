#pragma once

#include <array>
#include <span>
#include <vector>

#include "l3ppi/nn.hpp"
#include "l3ppi/tensor.hpp"

namespace l3ppi {

// Graph with per-node feature rows and per-edge weights in [0,1]; both enter
// the autodiff tape. A zero-weight edge contributes exactly nothing, so the
// output at w=0 matches the graph with that edge deleted.
struct WeightedGraph {
    Tensor node_features;                  // (n, d)
    std::vector<std::array<int, 2>> edges;  // undirected, no self-loops
    Tensor edge_weights;                   // (E, 1)
};

WeightedGraph make_weighted_graph(Tensor node_features, std::vector<std::array<int, 2>> edges,
                                  Tensor edge_weights = {});
void validate_graph(const WeightedGraph& g);

// out[v] = H[v] + sum_{(u,v) in E} w_uv * H[u]. Per-node contributions are
// reduced in value-canonical (lexicographic) order, so relabeling the nodes
// of a graph cannot change a single output bit.
Tensor graph_aggregate(const Tensor& node_features, const std::vector<std::array<int, 2>>& edges,
                       const Tensor& edge_weights);

struct GinConfig {
    int layers = 2;
    int hidden = 32;
    double dropout = 0.0;
};

// GIN-0 message passing: per layer h <- MLP(h + weighted neighbor sum) with a
// two-layer ReLU MLP.
struct GinLayers {
    std::vector<Mlp> layer_mlps;
};

GinLayers make_gin(int feature_dim, const GinConfig& cfg, Rng& init_rng);
Tensor gin_forward(const GinLayers& gin, const WeightedGraph& g,
                   const DropoutCtx* dropout_ctx = nullptr);

// Sum pooling over node embeddings, reduced in value-canonical row order.
Tensor readout(const Tensor& node_embs);  // (1, d)

// Task head: MLP then elementwise sigmoid.
Tensor head_forward(const Mlp& head, const Tensor& graph_emb,
                    const DropoutCtx* dropout_ctx = nullptr);

// The L3-pattern validity surrogate: GIN, readout, sigmoid head.
struct SurrogateModel {
    GinLayers gin;
    Mlp head;
    int feature_dim = 0;
    int hidden = 0;
    int out_dim = 1;  // 1 for binary validity, n for interaction types
    double dropout = 0.0;
};

SurrogateModel make_surrogate(int feature_dim, const GinConfig& cfg, int out_dim, Rng& init_rng);
Tensor surrogate_forward(const SurrogateModel& model, const WeightedGraph& g,
                         const DropoutCtx* dropout_ctx = nullptr);

std::vector<Tensor> surrogate_parameters(const SurrogateModel& model);
SurrogateModel clone_surrogate(const SurrogateModel& model);

}  // namespace l3ppi
