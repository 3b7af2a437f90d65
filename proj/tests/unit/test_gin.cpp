#include <algorithm>
#include <cstdio>
#include <map>

#include "doctest.h"
#include "l3ppi/census.hpp"
#include "l3ppi/errors.hpp"
#include "l3ppi/gin.hpp"
#include "l3ppi/pretrain.hpp"
#include "l3ppi/synth.hpp"
#include "oracles.hpp"

using namespace l3ppi;
using l3ppi::testing::letter_network;

namespace {

// A GIN layer whose MLP is the identity: weights I, biases 0. The hidden
// width must equal the feature dim, and the inner ReLU must see nonnegative
// values to be transparent.
Mlp identity_mlp(int d) {
    Mlp mlp;
    for (int layer = 0; layer < 2; ++layer) {
        std::vector<double> w(static_cast<std::size_t>(d) * static_cast<std::size_t>(d), 0.0);
        for (int i = 0; i < d; ++i) w[static_cast<std::size_t>(i) * d + static_cast<std::size_t>(i)] = 1.0;
        LinearLayer lin;
        lin.weight = Tensor::from_data({d, d}, std::move(w), true);
        lin.bias = Tensor::zeros({1, d}, true);
        mlp.layers.push_back(std::move(lin));
    }
    return mlp;
}

}  // namespace

TEST_CASE("zero edge weights isolate every node") {
    Rng rng = make_rng(3);
    GinConfig cfg{1, 6, 0.0};
    GinLayers gin = make_gin(4, cfg, rng);

    Tensor feats = Tensor::from_data({3, 4}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2});
    WeightedGraph connected = make_weighted_graph(feats, {{0, 1}, {1, 2}},
                                                  Tensor::zeros({2, 1}));
    WeightedGraph isolated = make_weighted_graph(feats, {});

    Tensor a = gin_forward(gin, connected);
    Tensor b = gin_forward(gin, isolated);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == b.data()[i]);
}

TEST_CASE("unit-weight aggregation with an identity mlp sums neighbors") {
    GinLayers gin;
    gin.layer_mlps.push_back(identity_mlp(2));
    Tensor feats = Tensor::from_data({2, 2}, {1.0, 2.0, 3.0, 5.0});
    WeightedGraph g = make_weighted_graph(feats, {{0, 1}});
    Tensor out = gin_forward(gin, g);
    CHECK(out.at(0, 0) == doctest::Approx(4.0));  // h_a + h_b
    CHECK(out.at(0, 1) == doctest::Approx(7.0));
    CHECK(out.at(1, 0) == doctest::Approx(4.0));
    CHECK(out.at(1, 1) == doctest::Approx(7.0));
}

TEST_CASE("gin gradients pass the finite-difference oracle") {
    Rng rng = make_rng(11);
    GinConfig cfg{2, 5, 0.0};
    GinLayers gin = make_gin(3, cfg, rng);

    std::normal_distribution<double> dist(0.0, 0.5);
    std::vector<double> fdata(5 * 3);
    for (double& x : fdata) x = dist(rng);
    Tensor feats = Tensor::from_data({5, 3}, std::move(fdata), true);
    Tensor weights = Tensor::from_data({4, 1}, {0.9, 0.4, 0.7, 0.2}, true);
    WeightedGraph g = make_weighted_graph(feats, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}, weights);

    std::vector<Tensor> params{feats, weights};
    for (const Mlp& mlp : gin.layer_mlps) collect_parameters(mlp, params);

    auto f = [&]() { return mean(gin_forward(gin, g)); };
    CHECK(grad_check(f, params, 1e-5) < 1e-4);
}

TEST_CASE("readout and head") {
    Tensor single = Tensor::from_data({1, 3}, {0.5, -1.0, 2.0});
    Tensor pooled = readout(single);
    CHECK(pooled.at(0, 0) == doctest::Approx(0.5));
    CHECK(pooled.at(0, 2) == doctest::Approx(2.0));

    Rng rng = make_rng(1);
    Mlp head = make_mlp(3, std::array<int, 2>{4, 2}, rng);
    Tensor probs = head_forward(head, Tensor::zeros({1, 3}));
    for (double p : probs.data()) CHECK(p == doctest::Approx(0.5));  // zero bias init
}

TEST_CASE("permutation invariance of readout over gin is bit-exact") {
    Rng rng = make_rng(29);
    GinConfig cfg{2, 7, 0.0};
    GinLayers gin = make_gin(4, cfg, rng);

    std::normal_distribution<double> dist(0.0, 1.0);
    const int n = 6;
    std::vector<double> fdata(static_cast<std::size_t>(n) * 4);
    for (double& x : fdata) x = dist(rng);
    std::vector<std::array<int, 2>> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}, {1, 4}};
    std::vector<double> wdata{1.0, 0.5, 0.25, 1.0, 0.75, 0.5, 0.125};

    // relabel via permutation pi
    std::vector<int> pi{3, 5, 0, 2, 4, 1};
    std::vector<double> fdata_p(fdata.size());
    for (int v = 0; v < n; ++v)
        for (int c = 0; c < 4; ++c)
            fdata_p[static_cast<std::size_t>(pi[static_cast<std::size_t>(v)]) * 4 + static_cast<std::size_t>(c)] =
                fdata[static_cast<std::size_t>(v) * 4 + static_cast<std::size_t>(c)];
    std::vector<std::array<int, 2>> edges_p;
    for (const auto& e : edges)
        edges_p.push_back({pi[static_cast<std::size_t>(e[0])], pi[static_cast<std::size_t>(e[1])]});
    // also shuffle edge order to stress the reduction
    std::swap(edges_p[0], edges_p[4]);
    std::vector<double> wdata_p = wdata;
    std::swap(wdata_p[0], wdata_p[4]);

    WeightedGraph g1 = make_weighted_graph(Tensor::from_data({n, 4}, fdata), edges,
                                           Tensor::from_data({7, 1}, wdata));
    WeightedGraph g2 = make_weighted_graph(Tensor::from_data({n, 4}, fdata_p), edges_p,
                                           Tensor::from_data({7, 1}, wdata_p));

    Tensor r1 = readout(gin_forward(gin, g1));
    Tensor r2 = readout(gin_forward(gin, g2));
    REQUIRE(r1.size() == r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1.data()[i] == r2.data()[i]);
}

TEST_CASE("edge weight continuity at zero equals deletion") {
    Rng rng = make_rng(13);
    GinConfig cfg{2, 6, 0.0};
    GinLayers gin = make_gin(3, cfg, rng);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> fdata(4 * 3);
    for (double& x : fdata) x = dist(rng);
    Tensor feats = Tensor::from_data({4, 3}, fdata);

    WeightedGraph zeroed = make_weighted_graph(feats, {{0, 1}, {1, 2}, {2, 3}},
                                               Tensor::from_data({3, 1}, {1.0, 0.0, 1.0}));
    WeightedGraph deleted = make_weighted_graph(feats, {{0, 1}, {2, 3}},
                                                Tensor::from_data({2, 1}, {1.0, 1.0}));
    Tensor a = readout(gin_forward(gin, zeroed));
    Tensor b = readout(gin_forward(gin, deleted));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == b.data()[i]);
}

TEST_CASE("graph validation rejects bad inputs") {
    Tensor feats = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    CHECK_THROWS_AS(make_weighted_graph(feats, {{0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(make_weighted_graph(feats, {{0, 5}}), std::invalid_argument);
    CHECK_THROWS_AS(make_weighted_graph(feats, {{0, 1}}, Tensor::from_data({1, 1}, {1.5})),
                    std::invalid_argument);
}

TEST_CASE("pretrain dataset construction") {
    // 4-path a-b-c-d plus closing edge (a,d): pair (a,d) owns path a-b-c-d
    PpiNetwork net = letter_network(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
    EmbeddingTable embs(2, {{"A", {1, 0}}, {"B", {0, 1}}, {"C", {1, 1}}, {"D", {0, 0}}});
    PretrainDataset ds = build_pretrain_dataset(net, embs, 0, 100, 0);

    bool found = false;
    for (const PretrainSample& s : ds.samples)
        if (s.nodes == std::array<int, 4>{0, 1, 2, 3} && s.label == 1) found = true;
    CHECK(found);
    // every positive sample is a genuine simple path with the direct edge excluded
    for (const PretrainSample& s : ds.samples) {
        CHECK(net.has_edge(s.nodes[0], s.nodes[1]));
        CHECK(net.has_edge(s.nodes[1], s.nodes[2]));
        CHECK(net.has_edge(s.nodes[2], s.nodes[3]));
    }
}

TEST_CASE("per-pair cap matches the enumeration count") {
    SynthConfig cfg;
    cfg.n_proteins = 90;
    cfg.alphabet = 4;
    cfg.q_hit = 0.4;
    cfg.q_noise = 0.01;
    cfg.seed = 3;
    SynthData data = synth_network(cfg);
    const int cap = 10;
    PretrainDataset ds = build_pretrain_dataset(data.net, data.embs, 30, cap, 1);

    std::map<std::pair<int, int>, int> per_pair;
    for (const PretrainSample& s : ds.samples) {
        auto key = std::minmax(s.nodes[0], s.nodes[3]);
        per_pair[{key.first, key.second}]++;
    }
    for (const auto& [pair, count] : per_pair) {
        CHECK(count <= cap);
        const std::int64_t exact =
            l3ppi::testing::naive_simple_path_count(data.net, pair.first, pair.second, 3, true);
        CHECK(count == std::min<std::int64_t>(exact, cap));
    }
}

TEST_CASE("pretrain rejects single-class data") {
    PpiNetwork net = letter_network(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
    EmbeddingTable embs(2, {{"A", {1, 0}}, {"B", {0, 1}}, {"C", {1, 1}}, {"D", {0, 0}}});
    PretrainDataset ds = build_pretrain_dataset(net, embs, 0, 100, 0);  // positives only
    FeatureMatrix features = embs.aligned_to(net);
    PretrainConfig cfg;
    cfg.epochs = 1;
    CHECK_THROWS_AS(pretrain(ds, features, cfg), DataError);
}

TEST_CASE("pretrain dataset cache round trip") {
    PpiNetwork net = letter_network(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
    EmbeddingTable embs(2, {{"A", {1, 0}}, {"B", {0, 1}}, {"C", {1, 1}}, {"D", {0, 0}}});
    PretrainDataset ds = build_pretrain_dataset(net, embs, 2, 100, 7);

    const std::string path = "/tmp/l3ppi_cache_test.bin";
    save_pretrain_cache(path, ds, 7, 2, 100, net.edge_count());
    PretrainDataset loaded;
    REQUIRE(load_pretrain_cache(path, 7, 2, 100, net.edge_count(), loaded));
    CHECK(loaded.samples.size() == ds.samples.size());
    CHECK(loaded.samples[0].nodes == ds.samples[0].nodes);
    // stamp mismatch rejects the cache
    CHECK_FALSE(load_pretrain_cache(path, 8, 2, 100, net.edge_count(), loaded));
    std::remove(path.c_str());
}
