#pragma once

#include <cstdint>
#include <vector>

#include "l3ppi/graph.hpp"
#include "l3ppi/split.hpp"

namespace l3ppi {

// Complementarity generator: each protein gets a shape id and a concave or
// convex orientation; pairs with the same shape and opposite orientation are
// "lock-and-key" matches and link with probability q_hit, everything else
// with q_noise. Embeddings are one-hot(shape) + one-hot(orientation) plus
// Gaussian noise, so complementarity is recoverable from features. This
// plants an L3-dominant path signal (matched chains alternate orientations).
struct SynthConfig {
    int n_proteins = 600;
    int alphabet = 12;      // shape alphabet size
    double q_hit = 0.4;     // link probability for complementary pairs
    double q_noise = 0.002; // link probability otherwise
    double sigma = 0.1;     // embedding noise stddev
    std::uint64_t seed = 0;
    int n_heldout = 200;    // truth-labeled non-edge pairs emitted for testing
};

struct SynthTruth {
    std::vector<int> shape_id;
    std::vector<int> orientation;  // 0 = concave, 1 = convex

    bool complementary(int i, int j) const {
        return shape_id[static_cast<std::size_t>(i)] == shape_id[static_cast<std::size_t>(j)] &&
               orientation[static_cast<std::size_t>(i)] != orientation[static_cast<std::size_t>(j)];
    }
};

struct SynthData {
    PpiNetwork net;        // every protein is a node, including isolated ones
    EmbeddingTable embs;   // dim = alphabet + 2
    SynthTruth truth;
    std::vector<SplitPair> heldout;  // non-edges labeled by complementarity
};

SynthData synth_network(const SynthConfig& cfg);

std::string synth_protein_id(int index, int n_proteins);

}  // namespace l3ppi
