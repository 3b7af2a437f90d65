#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "l3ppi/census.hpp"
#include "l3ppi/errors.hpp"
#include "l3ppi/metrics.hpp"
#include "l3ppi/model_io.hpp"
#include "l3ppi/synth.hpp"

using namespace l3ppi;

TEST_CASE("micro f1 closed forms") {
    std::vector<double> perfect{0.9, 0.9, 0.1, 0.1};
    std::vector<int> labels{1, 1, 0, 0};
    CHECK(micro_f1(perfect, labels) == doctest::Approx(1.0));

    std::vector<double> half{1.0, 1.0, 0.0, 0.0};
    std::vector<int> mixed{1, 0, 1, 0};
    CHECK(micro_f1(half, mixed) == doctest::Approx(0.5));

    // degenerate all-negative case scores 1.0
    std::vector<double> all_neg{0.1, 0.2};
    std::vector<int> neg_labels{0, 0};
    CHECK(micro_f1(all_neg, neg_labels) == doctest::Approx(1.0));

    CHECK_THROWS_AS(micro_f1({}, {}), std::invalid_argument);
}

TEST_CASE("micro f1 is invariant under sample permutation") {
    Rng rng = make_rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> probs(40);
    std::vector<int> labels(40);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        probs[i] = u(rng);
        labels[i] = u(rng) < 0.5 ? 0 : 1;
    }
    const double base = micro_f1(probs, labels);
    std::vector<std::size_t> perm(probs.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> probs_p(probs.size());
    std::vector<int> labels_p(labels.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        probs_p[i] = probs[perm[i]];
        labels_p[i] = labels[perm[i]];
    }
    CHECK(micro_f1(probs_p, labels_p) == doctest::Approx(base));
}

namespace {

PromptModel make_model(int K, int d, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    PromptModel model;
    model.surrogate = make_surrogate(d, GinConfig{1, 8, 0.0}, 1, rng);
    model.bank = make_prompt_bank(K, d, rng);
    model.gating = make_gating(d, GinConfig{1, 8, 0.0}, rng);
    return model;
}

}  // namespace

TEST_CASE("eval_split marks absent categories as absent and pools the overall f1") {
    SynthConfig cfg;
    cfg.n_proteins = 50;
    cfg.alphabet = 4;
    cfg.q_hit = 0.5;
    cfg.q_noise = 0.01;
    cfg.seed = 1;
    SynthData data = synth_network(cfg);
    FeatureMatrix features = data.embs.aligned_to(data.net);
    PromptModel model = make_model(3, data.embs.dim(), 99);

    SplitSpec split;
    // train covers every protein in the test pairs -> BS only
    split.train = {{0, 1, 1}, {2, 3, 1}, {4, 5, 1}};
    split.test = {{0, 2, 1}, {1, 4, 0}, {3, 5, 1}};
    EvalMetrics m = eval_split(model, split, features, data.net.node_count(), 0);
    CHECK(m.bs.has_value());
    CHECK_FALSE(m.es.has_value());
    CHECK_FALSE(m.ns.has_value());
    CHECK(m.test_pairs == 3);
    // overall = pooled micro over all decisions, which for BS-only equals BS f1
    CHECK(m.overall_f1 == doctest::Approx(m.bs->f1));

    // category counts total the test size
    std::size_t total = 0;
    for (const auto& c : {m.bs, m.es, m.ns})
        if (c) total += c->pairs;
    CHECK(total == m.test_pairs);
}

TEST_CASE("inferred_vs_actual caps counts and flags degenerate variance") {
    SynthConfig cfg;
    cfg.n_proteins = 40;
    cfg.alphabet = 4;
    cfg.q_hit = 0.5;
    cfg.q_noise = 0.02;
    cfg.seed = 4;
    SynthData data = synth_network(cfg);
    FeatureMatrix features = data.embs.aligned_to(data.net);

    PromptModel open_model = make_model(3, data.embs.dim(), 11);
    open_model.use_gating = false;  // gating all-open

    std::vector<SplitPair> pairs{{0, 1, 1}, {2, 3, 0}, {4, 5, 1}};
    InferredVsActualResult r = inferred_vs_actual(open_model, data.net, pairs, features);
    for (const auto& row : r.rows) {
        CHECK(row.inferred == 3);  // always K when gates are bypassed
        CHECK(row.actual <= 3);
    }
    CHECK_FALSE(r.rho.has_value());  // inferred is constant -> undefined correlation

    std::vector<SplitPair> single{{0, 1, 1}};
    CHECK_THROWS_AS(inferred_vs_actual(open_model, data.net, single, features),
                    std::invalid_argument);

    const std::string csv = inferred_vs_actual_csv(data.net, r);
    CHECK(csv.rfind("u,v,label,actual_capped,inferred\n", 0) == 0);
}

TEST_CASE("synth generator obeys its contracts") {
    CHECK_THROWS_AS(synth_network(SynthConfig{100, 1, 0.4, 0.002, 0.1, 0}), ConfigError);
    CHECK_THROWS_AS(synth_network(SynthConfig{100, 8, 0.2, 0.4, 0.1, 0}), ConfigError);

    SynthConfig clean;
    clean.n_proteins = 80;
    clean.alphabet = 5;
    clean.q_hit = 0.5;
    clean.q_noise = 0.0;
    clean.sigma = 0.0;
    clean.seed = 8;
    SynthData data = synth_network(clean);
    // with q_noise=0 every edge joins a complementary same-shape pair
    for (const EdgeRec& e : data.net.edges()) CHECK(data.truth.complementary(e.u, e.v));

    // determinism
    SynthData again = synth_network(clean);
    CHECK(serialize_network(data.net) == serialize_network(again.net));
    CHECK(data.embs.vector_for("P00")[0] == again.embs.vector_for("P00")[0]);

    // heldout pairs are non-edges labeled by complementarity
    for (const SplitPair& p : data.heldout) {
        CHECK_FALSE(data.net.has_edge(p.u, p.v));
        CHECK(static_cast<int>(p.label) == (data.truth.complementary(p.u, p.v) ? 1 : 0));
    }
}

TEST_CASE("positive pairs dominate negatives in L3 counts (rank test)") {
    SynthConfig cfg;
    cfg.n_proteins = 150;
    cfg.alphabet = 8;
    cfg.q_hit = 0.4;
    cfg.q_noise = 0.0;
    cfg.sigma = 0.1;
    cfg.seed = 0;
    SynthData data = synth_network(cfg);

    L3Report report = l3_report(data.net, 120, 120, 3, 0, 4);
    std::vector<double> pos, neg;
    for (const CensusRow& row : report.census_rows)
        (row.label ? pos : neg).push_back(static_cast<double>(row.counts[1]));

    // Mann-Whitney U with normal approximation; positives must dominate
    double u_stat = 0.0;
    for (double a : pos)
        for (double b : neg) u_stat += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
    const double n1 = static_cast<double>(pos.size());
    const double n2 = static_cast<double>(neg.size());
    const double mean_u = n1 * n2 / 2.0;
    const double sd_u = std::sqrt(n1 * n2 * (n1 + n2 + 1.0) / 12.0);
    const double z = (u_stat - mean_u) / sd_u;
    CHECK(z > 2.33);  // one-sided p < 0.01
}

TEST_CASE("model bundle checkpoint round trips") {
    PromptModel model = make_model(4, 6, 321);
    model.use_gating = true;
    const std::string path = "/tmp/l3ppi_bundle_test.ckpt";
    save_prompt_model(path, model, R"({"note":"test"})");
    PromptModel loaded = load_prompt_model(path);

    CHECK(loaded.bank.path_budget == model.bank.path_budget);
    CHECK(loaded.use_gating == model.use_gating);
    REQUIRE(loaded.bank.embeddings.size() == model.bank.embeddings.size());
    for (std::size_t i = 0; i < model.bank.embeddings.size(); ++i)
        CHECK(loaded.bank.embeddings.data()[i] == model.bank.embeddings.data()[i]);

    // loaded model predicts identically
    Rng rng = make_rng(2);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> ud(6), vd(6);
    for (double& x : ud) x = dist(rng);
    for (double& x : vd) x = dist(rng);
    Tensor u = Tensor::from_data({1, 6}, ud);
    Tensor v = Tensor::from_data({1, 6}, vd);
    PredictOptions opts;
    CHECK(predict(model, u, v, opts).output.data()[0] ==
          predict(loaded, u, v, opts).output.data()[0]);
    std::remove(path.c_str());
}
