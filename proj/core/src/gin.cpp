#include "l3ppi/gin.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "l3ppi/errors.hpp"

namespace l3ppi {

WeightedGraph make_weighted_graph(Tensor node_features, std::vector<std::array<int, 2>> edges,
                                  Tensor edge_weights) {
    WeightedGraph g;
    g.node_features = std::move(node_features);
    g.edges = std::move(edges);
    if (edge_weights.defined())
        g.edge_weights = std::move(edge_weights);
    else
        g.edge_weights = Tensor::full({std::max<int>(1, static_cast<int>(g.edges.size())), 1}, 1.0);
    if (g.edges.empty()) g.edge_weights = Tensor::zeros({1, 1});
    validate_graph(g);
    return g;
}

void validate_graph(const WeightedGraph& g) {
    if (!g.node_features.defined() || g.node_features.shape().size() != 2)
        throw std::invalid_argument("graph: node features must be an (n,d) matrix");
    const int n = g.node_features.rows();
    for (const auto& e : g.edges) {
        if (e[0] == e[1]) throw std::invalid_argument("graph: self-loop");
        if (e[0] < 0 || e[0] >= n || e[1] < 0 || e[1] >= n)
            throw std::invalid_argument("graph: edge index out of range");
    }
    if (!g.edges.empty()) {
        if (g.edge_weights.size() != g.edges.size())
            throw std::invalid_argument("graph: edge weight count mismatch");
        for (double w : g.edge_weights.data()) {
            if (!std::isfinite(w) || w < 0.0 || w > 1.0)
                throw std::invalid_argument("graph: edge weights must lie in [0,1]");
        }
    }
    for (double x : g.node_features.data())
        if (!std::isfinite(x)) throw std::invalid_argument("graph: non-finite node feature");
}

namespace {

bool row_less(const std::vector<double>& buf, std::size_t a, std::size_t b, std::size_t d) {
    return std::lexicographical_compare(buf.begin() + static_cast<std::ptrdiff_t>(a * d),
                                        buf.begin() + static_cast<std::ptrdiff_t>((a + 1) * d),
                                        buf.begin() + static_cast<std::ptrdiff_t>(b * d),
                                        buf.begin() + static_cast<std::ptrdiff_t>((b + 1) * d));
}

}  // namespace

Tensor graph_aggregate(const Tensor& node_features, const std::vector<std::array<int, 2>>& edges,
                       const Tensor& edge_weights) {
    const int n = node_features.rows();
    const int d = node_features.cols();
    const auto H = node_features.data();
    const auto W = edge_weights.data();

    // contributions[v] holds, per incident edge, the row w_e * H[other]
    std::vector<std::vector<std::size_t>> incident(static_cast<std::size_t>(n));
    std::vector<double> contrib(edges.size() * 2 * static_cast<std::size_t>(d));
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const int a = edges[e][0];
        const int b = edges[e][1];
        const double w = W[e];
        // slot 2e   : contribution of a's row to b
        // slot 2e+1 : contribution of b's row to a
        for (int c = 0; c < d; ++c) {
            contrib[(2 * e) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)] =
                w * H[static_cast<std::size_t>(a) * d + static_cast<std::size_t>(c)];
            contrib[(2 * e + 1) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)] =
                w * H[static_cast<std::size_t>(b) * d + static_cast<std::size_t>(c)];
        }
        incident[static_cast<std::size_t>(b)].push_back(2 * e);
        incident[static_cast<std::size_t>(a)].push_back(2 * e + 1);
    }

    std::vector<double> out(H.begin(), H.end());
    for (int v = 0; v < n; ++v) {
        auto& slots = incident[static_cast<std::size_t>(v)];
        std::sort(slots.begin(), slots.end(), [&](std::size_t x, std::size_t y) {
            return row_less(contrib, x, y, static_cast<std::size_t>(d));
        });
        for (std::size_t slot : slots)
            for (int c = 0; c < d; ++c)
                out[static_cast<std::size_t>(v) * d + static_cast<std::size_t>(c)] +=
                    contrib[slot * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
    }

    auto hn = node_features.node();
    auto wn = edge_weights.node();
    auto edge_copy = std::make_shared<std::vector<std::array<int, 2>>>(edges);
    return make_op(
        node_features.shape(), std::move(out), {node_features, edge_weights},
        [hn, wn, edge_copy, d](detail::TensorNode& o) {
            const auto& E = *edge_copy;
            if (hn->tracked) {
                for (std::size_t i = 0; i < hn->size(); ++i) hn->accumulate(i, o.grad[i]);
                for (std::size_t e = 0; e < E.size(); ++e) {
                    const int a = E[e][0];
                    const int b = E[e][1];
                    const double w = wn->data[e];
                    for (int c = 0; c < d; ++c) {
                        hn->accumulate(static_cast<std::size_t>(a) * d + static_cast<std::size_t>(c),
                                       w * o.grad[static_cast<std::size_t>(b) * d + static_cast<std::size_t>(c)]);
                        hn->accumulate(static_cast<std::size_t>(b) * d + static_cast<std::size_t>(c),
                                       w * o.grad[static_cast<std::size_t>(a) * d + static_cast<std::size_t>(c)]);
                    }
                }
            }
            if (wn->tracked) {
                for (std::size_t e = 0; e < E.size(); ++e) {
                    const int a = E[e][0];
                    const int b = E[e][1];
                    double acc = 0.0;
                    for (int c = 0; c < d; ++c) {
                        acc += o.grad[static_cast<std::size_t>(b) * d + static_cast<std::size_t>(c)] *
                               hn->data[static_cast<std::size_t>(a) * d + static_cast<std::size_t>(c)];
                        acc += o.grad[static_cast<std::size_t>(a) * d + static_cast<std::size_t>(c)] *
                               hn->data[static_cast<std::size_t>(b) * d + static_cast<std::size_t>(c)];
                    }
                    wn->accumulate(e, acc);
                }
            }
        });
}

GinLayers make_gin(int feature_dim, const GinConfig& cfg, Rng& init_rng) {
    if (cfg.layers < 1) throw ConfigError("gin: need at least one layer");
    GinLayers gin;
    int cur = feature_dim;
    for (int l = 0; l < cfg.layers; ++l) {
        const std::array<int, 2> widths{cfg.hidden, cfg.hidden};
        gin.layer_mlps.push_back(make_mlp(cur, widths, init_rng));
        cur = cfg.hidden;
    }
    return gin;
}

Tensor gin_forward(const GinLayers& gin, const WeightedGraph& g, const DropoutCtx* dropout_ctx) {
    validate_graph(g);
    Tensor h = g.node_features;
    for (const Mlp& mlp : gin.layer_mlps) {
        Tensor agg = g.edges.empty() ? h : graph_aggregate(h, g.edges, g.edge_weights);
        h = mlp_forward(mlp, agg, dropout_ctx);
    }
    return h;
}

Tensor readout(const Tensor& node_embs) {
    if (node_embs.shape().size() != 2 || node_embs.rows() < 1)
        throw std::invalid_argument("readout: want a nonempty (n,d) matrix");
    const int n = node_embs.rows();
    const int d = node_embs.cols();
    const auto H = node_embs.data();

    std::vector<double> buf(H.begin(), H.end());
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return row_less(buf, a, b, static_cast<std::size_t>(d));
    });

    std::vector<double> out(static_cast<std::size_t>(d), 0.0);
    for (std::size_t r : order)
        for (int c = 0; c < d; ++c)
            out[static_cast<std::size_t>(c)] += buf[r * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];

    auto hn = node_embs.node();
    return make_op({1, d}, std::move(out), {node_embs}, [hn, n, d](detail::TensorNode& o) {
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < d; ++c)
                hn->accumulate(static_cast<std::size_t>(r) * d + static_cast<std::size_t>(c),
                               o.grad[static_cast<std::size_t>(c)]);
    });
}

Tensor head_forward(const Mlp& head, const Tensor& graph_emb, const DropoutCtx* dropout_ctx) {
    return sigmoid(mlp_forward(head, graph_emb, dropout_ctx));
}

SurrogateModel make_surrogate(int feature_dim, const GinConfig& cfg, int out_dim, Rng& init_rng) {
    SurrogateModel model;
    model.feature_dim = feature_dim;
    model.hidden = cfg.hidden;
    model.out_dim = out_dim;
    model.dropout = cfg.dropout;
    model.gin = make_gin(feature_dim, cfg, init_rng);
    const std::array<int, 2> head_widths{cfg.hidden, out_dim};
    model.head = make_mlp(cfg.hidden, head_widths, init_rng);
    return model;
}

Tensor surrogate_forward(const SurrogateModel& model, const WeightedGraph& g,
                         const DropoutCtx* dropout_ctx) {
    Tensor node_embs = gin_forward(model.gin, g, dropout_ctx);
    return head_forward(model.head, readout(node_embs), dropout_ctx);
}

std::vector<Tensor> surrogate_parameters(const SurrogateModel& model) {
    std::vector<Tensor> params;
    for (const Mlp& mlp : model.gin.layer_mlps) collect_parameters(mlp, params);
    collect_parameters(model.head, params);
    return params;
}

SurrogateModel clone_surrogate(const SurrogateModel& model) {
    SurrogateModel copy;
    copy.feature_dim = model.feature_dim;
    copy.hidden = model.hidden;
    copy.out_dim = model.out_dim;
    copy.dropout = model.dropout;
    for (const Mlp& mlp : model.gin.layer_mlps) copy.gin.layer_mlps.push_back(clone_mlp(mlp));
    copy.head = clone_mlp(model.head);
    return copy;
}

}  // namespace l3ppi
