#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "l3ppi/gin.hpp"
#include "l3ppi/graph.hpp"
#include "l3ppi/metrics.hpp"

namespace l3ppi {

// One length-3 path sample: node indices along the path and the label of the
// query pair at its ends (0 for non-edges; 1 or a type bitset for edges).
struct PretrainSample {
    std::array<int, 4> nodes{};
    TypeBitset label = 0;
};

struct PretrainDataset {
    std::vector<PretrainSample> samples;
    int n_types = 0;  // 0 = binary validity labels
};

// Positives: length-3 simple paths (direct edge excluded) for every edge;
// negatives: the same for n_neg_pairs sampled non-edges. Each pair keeps at
// most per_pair_cap paths via seeded reservoir sampling. exclude_negatives
// keeps held-out pairs (e.g. val/test) out of the negative pool.
PretrainDataset build_pretrain_dataset(const PpiNetwork& net, const EmbeddingTable& embs,
                                       int n_neg_pairs, int per_pair_cap, std::uint64_t seed,
                                       std::span<const std::pair<int, int>> exclude_negatives = {});

// Seed-stamped binary cache so repeated runs skip re-enumeration. Loading
// with a different (seed, n_neg_pairs, per_pair_cap, edge count) returns false.
void save_pretrain_cache(const std::string& path, const PretrainDataset& dataset,
                         std::uint64_t seed, int n_neg_pairs, int per_pair_cap,
                         std::size_t edge_count);
bool load_pretrain_cache(const std::string& path, std::uint64_t seed, int n_neg_pairs,
                         int per_pair_cap, std::size_t edge_count, PretrainDataset& out);

struct PretrainConfig {
    GinConfig gin;
    double lr = 1e-3;
    int batch_size = 64;
    int epochs = 200;
    double val_fraction = 0.1;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct PretrainEpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
};

struct PretrainResult {
    SurrogateModel model;  // best-validation-loss checkpoint; frozen afterwards
    std::vector<PretrainEpochStats> history;
    int best_epoch = 0;
    double best_val_loss = 0.0;
};

// Mini-batch Adam on (possibly elementwise) BCE. Requires both labels present.
PretrainResult pretrain(const PretrainDataset& dataset, const FeatureMatrix& features,
                        const PretrainConfig& cfg);

// Builds the 4-node path graph for one sample.
WeightedGraph pretrain_sample_graph(const PretrainSample& sample, const FeatureMatrix& features);

std::string pretrain_history_jsonl(std::span<const PretrainEpochStats> history);

}  // namespace l3ppi
