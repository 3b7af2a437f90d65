#include "l3ppi/synth.hpp"

#include <algorithm>

#include "l3ppi/errors.hpp"
#include "l3ppi/rng.hpp"

namespace l3ppi {

std::string synth_protein_id(int index, int n_proteins) {
    int width = 1;
    for (int x = n_proteins - 1; x >= 10; x /= 10) ++width;
    std::string digits = std::to_string(index);
    return "P" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
}

SynthData synth_network(const SynthConfig& cfg) {
    if (cfg.n_proteins < 4) throw ConfigError("synth: need at least 4 proteins");
    if (cfg.alphabet < 2) throw ConfigError("synth: shape alphabet must have A >= 2");
    if (!(cfg.q_noise >= 0.0 && cfg.q_noise < cfg.q_hit && cfg.q_hit <= 1.0))
        throw ConfigError("synth: need 0 <= q_noise < q_hit <= 1");
    if (cfg.sigma < 0.0) throw ConfigError("synth: sigma must be >= 0");

    const int n = cfg.n_proteins;
    SynthTruth truth;
    truth.shape_id.resize(static_cast<std::size_t>(n));
    truth.orientation.resize(static_cast<std::size_t>(n));

    Rng attr_rng = make_rng(derive_seed(cfg.seed, "synth-attrs"));
    std::uniform_int_distribution<int> shape_pick(0, cfg.alphabet - 1);
    std::uniform_int_distribution<int> orient_pick(0, 1);
    for (int i = 0; i < n; ++i) {
        truth.shape_id[static_cast<std::size_t>(i)] = shape_pick(attr_rng);
        truth.orientation[static_cast<std::size_t>(i)] = orient_pick(attr_rng);
    }

    Rng edge_rng = make_rng(derive_seed(cfg.seed, "synth-edges"));
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<EdgeRec> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double p = truth.complementary(i, j) ? cfg.q_hit : cfg.q_noise;
            if (coin(edge_rng) < p) edges.push_back({i, j, 1});
        }
    }

    std::vector<std::string> ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = synth_protein_id(i, n);

    SynthData data;
    data.truth = truth;
    data.net = PpiNetwork::from_edges(ids, edges, NetworkMode::Binary);

    // shape one-hot signed by orientation (+1 concave, -1 convex) plus an
    // orientation one-hot block: complementary pairs cancel in their shape
    // coordinate, which keeps the lock-and-key signal additively readable
    const int dim = cfg.alphabet + 2;
    Rng feat_rng = make_rng(derive_seed(cfg.seed, "synth-features"));
    std::normal_distribution<double> noise(0.0, cfg.sigma);
    std::unordered_map<std::string, std::vector<double>> vectors;
    vectors.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::vector<double> vec(static_cast<std::size_t>(dim), 0.0);
        const int orient = truth.orientation[static_cast<std::size_t>(i)];
        vec[static_cast<std::size_t>(truth.shape_id[static_cast<std::size_t>(i)])] =
            orient == 0 ? 1.0 : -1.0;
        vec[static_cast<std::size_t>(cfg.alphabet + orient)] = 1.0;
        if (cfg.sigma > 0.0)
            for (double& x : vec) x += noise(feat_rng);
        vectors.emplace(ids[static_cast<std::size_t>(i)], std::move(vec));
    }
    data.embs = EmbeddingTable(dim, std::move(vectors));

    // held-out non-edges labeled by complementarity, balanced when possible
    Rng held_rng = make_rng(derive_seed(cfg.seed, "synth-heldout"));
    std::vector<SplitPair> comp, noncomp;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (data.net.has_edge(i, j)) continue;
            if (truth.complementary(i, j))
                comp.push_back({i, j, 1});
            else
                noncomp.push_back({i, j, 0});
        }
    }
    std::shuffle(comp.begin(), comp.end(), held_rng);
    std::shuffle(noncomp.begin(), noncomp.end(), held_rng);
    const std::size_t half = static_cast<std::size_t>(cfg.n_heldout) / 2;
    const std::size_t n_comp = std::min(half, comp.size());
    const std::size_t n_non = std::min(half, noncomp.size());
    data.heldout.assign(comp.begin(), comp.begin() + static_cast<std::ptrdiff_t>(n_comp));
    data.heldout.insert(data.heldout.end(), noncomp.begin(),
                        noncomp.begin() + static_cast<std::ptrdiff_t>(n_non));
    return data;
}

}  // namespace l3ppi
