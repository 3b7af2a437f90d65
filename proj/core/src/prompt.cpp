#include "l3ppi/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "l3ppi/errors.hpp"

namespace l3ppi {

PromptBank make_prompt_bank(int path_budget, int dim, Rng& init_rng) {
    if (path_budget < 1) throw ConfigError("prompt bank: K must be >= 1");
    if (dim < 1) throw ConfigError("prompt bank: dim must be >= 1");
    std::normal_distribution<double> dist(0.0, 0.1);
    std::vector<double> data(static_cast<std::size_t>(path_budget + 1) * static_cast<std::size_t>(dim));
    for (double& x : data) x = dist(init_rng);
    PromptBank bank;
    bank.path_budget = path_budget;
    bank.embeddings = Tensor::from_data({path_budget + 1, dim}, std::move(data), true);
    return bank;
}

PromptBank clone_prompt_bank(const PromptBank& bank) {
    return PromptBank{bank.path_budget, bank.embeddings.detached_copy(true)};
}

PromptPattern build_initial_pattern(const Tensor& u_emb, const Tensor& v_emb,
                                    const PromptBank& bank) {
    const int d = bank.embeddings.cols();
    if (u_emb.shape() != std::vector<int>{1, d} || v_emb.shape() != std::vector<int>{1, d})
        throw std::invalid_argument("query embeddings must be (1,d) rows matching the bank");
    const int K = bank.path_budget;

    const Tensor parts[] = {u_emb, v_emb, bank.embeddings};
    Tensor features = concat_rows(parts);

    // u=0, v=1, p0=2, p_i=2+i
    std::vector<std::array<int, 2>> edges;
    edges.reserve(static_cast<std::size_t>(2 * K + 1));
    for (int i = 1; i <= K; ++i) {
        edges.push_back({0, 2 + i});
        edges.push_back({2 + i, 2});
    }
    edges.push_back({2, 1});

    PromptPattern pattern;
    pattern.path_budget = K;
    pattern.graph = make_weighted_graph(std::move(features), std::move(edges),
                                        Tensor::full({2 * K + 1, 1}, 1.0));
    return pattern;
}

std::vector<WeightedGraph> decompose_paths(const PromptPattern& pattern) {
    const int K = pattern.path_budget;
    std::vector<WeightedGraph> paths;
    paths.reserve(static_cast<std::size_t>(K));
    for (int i = 1; i <= K; ++i) {
        // node order [u, v, p0, p_i]; edges u-p_i, p_i-p0, p0-v
        Tensor features = gather_rows(pattern.graph.node_features, {0, 1, 2, 2 + i});
        std::vector<std::array<int, 2>> edges{{0, 3}, {3, 2}, {2, 1}};
        paths.push_back(make_weighted_graph(std::move(features), std::move(edges),
                                            Tensor::full({3, 1}, 1.0)));
    }
    return paths;
}

GatingModel make_gating(int feature_dim, const GinConfig& cfg, Rng& init_rng) {
    GatingModel model;
    model.feature_dim = feature_dim;
    model.hidden = cfg.hidden;
    model.dropout = cfg.dropout;
    model.gin = make_gin(feature_dim, cfg, init_rng);
    const std::array<int, 2> head_widths{cfg.hidden, 1};
    model.head = make_mlp(cfg.hidden, head_widths, init_rng);
    return model;
}

std::vector<Tensor> gating_parameters(const GatingModel& model) {
    std::vector<Tensor> params;
    for (const Mlp& mlp : model.gin.layer_mlps) collect_parameters(mlp, params);
    collect_parameters(model.head, params);
    return params;
}

GatingModel clone_gating(const GatingModel& model) {
    GatingModel copy;
    copy.feature_dim = model.feature_dim;
    copy.hidden = model.hidden;
    copy.dropout = model.dropout;
    for (const Mlp& mlp : model.gin.layer_mlps) copy.gin.layer_mlps.push_back(clone_mlp(mlp));
    copy.head = clone_mlp(model.head);
    return copy;
}

Tensor gate_probs(const GatingModel& model, std::span<const WeightedGraph> paths,
                  const DropoutCtx* dropout_ctx) {
    if (paths.empty()) throw std::invalid_argument("gate_probs: no candidate paths");
    std::vector<Tensor> scores;
    scores.reserve(paths.size());
    for (const WeightedGraph& path : paths) {
        Tensor emb = readout(gin_forward(model.gin, path, dropout_ctx));
        scores.push_back(sigmoid(mlp_forward(model.head, emb, dropout_ctx)));
    }
    return clamp(concat_rows(scores), 1e-6, 1.0 - 1e-6);
}

Tensor gumbel_sigmoid(const Tensor& p, double tau, Rng* noise_rng, bool training) {
    if (tau <= 0.0) throw ConfigError("gumbel_sigmoid: tau must be positive");
    if (!training) {
        std::vector<double> hard(p.size());
        const auto pd = p.data();
        for (std::size_t i = 0; i < hard.size(); ++i) hard[i] = pd[i] > 0.5 ? 1.0 : 0.0;
        return Tensor::from_data(p.shape(), std::move(hard));
    }

    std::vector<double> noise(p.size(), 0.0);
    if (noise_rng) {
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        auto gumbel = [&]() {
            double u = std::clamp(uni(*noise_rng), 1e-10, 1.0 - 1e-10);
            return -std::log(-std::log(u));
        };
        for (double& x : noise) {
            const double eps = gumbel();
            const double eps_prime = gumbel();
            x = eps - eps_prime;
        }
    }
    Tensor logit = sub(log_t(p), log_t(add_scalar(neg(p), 1.0)));
    Tensor shifted = add(logit, Tensor::from_data(p.shape(), std::move(noise)));
    return sigmoid(mul_scalar(shifted, 1.0 / tau));
}

PromptPattern assemble_final(const PromptPattern& pattern, const Tensor& gates) {
    const int K = pattern.path_budget;
    if (static_cast<int>(gates.size()) != K)
        throw std::invalid_argument("assemble_final: need one gate per candidate path");

    // weight order mirrors the pattern edge order
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(2 * K));
    for (int i = 0; i < K; ++i) {
        idx.push_back(i);
        idx.push_back(i);
    }
    Tensor private_edges = gather_rows(gates, std::move(idx));
    Tensor shared_edge = reduce_max(gates);
    // reduce_max yields a scalar {1}; reshape to a (1,1) row for concat
    Tensor shared_row = make_op({1, 1}, {shared_edge.value()}, {shared_edge},
                                [sn = shared_edge.node()](detail::TensorNode& o) {
                                    sn->accumulate(0, o.grad[0]);
                                });
    const Tensor parts[] = {private_edges, shared_row};
    Tensor weights = concat_rows(parts);

    PromptPattern out;
    out.path_budget = K;
    out.graph.node_features = pattern.graph.node_features;
    out.graph.edges = pattern.graph.edges;
    out.graph.edge_weights = std::move(weights);
    validate_graph(out.graph);
    return out;
}

Prediction predict(const PromptModel& model, const Tensor& u_emb, const Tensor& v_emb,
                   const PredictOptions& opts) {
    PromptPattern pattern = build_initial_pattern(u_emb, v_emb, model.bank);

    Prediction pred;
    if (opts.force_gates_open || !model.use_gating) {
        pred.gates = Tensor::full({pattern.path_budget, 1}, 1.0);
        pred.output = surrogate_forward(model.surrogate, pattern.graph, opts.dropout_ctx);
        return pred;
    }

    std::vector<WeightedGraph> paths = decompose_paths(pattern);
    pred.probs = gate_probs(model.gating, paths, opts.dropout_ctx);
    pred.gates = gumbel_sigmoid(pred.probs, opts.tau, opts.gumbel_rng, opts.training);
    PromptPattern final_pattern = assemble_final(pattern, pred.gates);
    pred.output = surrogate_forward(model.surrogate, final_pattern.graph, opts.dropout_ctx);
    return pred;
}

int count_active_paths(const PromptModel& model, const Tensor& u_emb, const Tensor& v_emb) {
    if (!model.use_gating) return model.bank.path_budget;
    PromptPattern pattern = build_initial_pattern(u_emb, v_emb, model.bank);
    std::vector<WeightedGraph> paths = decompose_paths(pattern);
    Tensor p = gate_probs(model.gating, paths, nullptr);
    int active = 0;
    for (double x : p.data())
        if (x > 0.5) ++active;
    return active;
}

}  // namespace l3ppi
