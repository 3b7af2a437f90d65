#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "l3ppi/graph.hpp"

namespace l3ppi {

enum class SplitScheme { Random, Bfs, Dfs };

std::string to_string(SplitScheme s);
SplitScheme split_scheme_from_string(const std::string& s);

// A labeled query pair. Binary data stores 0/1 in the bitset; multilabel data
// stores the interaction-type bitset (always nonzero there).
struct SplitPair {
    int u = 0;
    int v = 0;
    TypeBitset label = 0;
};

struct SplitSpec {
    std::vector<SplitPair> train, val, test;
    SplitScheme scheme = SplitScheme::Random;
    std::uint64_t seed = 0;
    std::optional<int> root;  // bfs/dfs only
    int root_threshold = 6;   // t: accepted roots have degree < t
};

enum class PairCategory { BS, ES, NS };

std::string to_string(PairCategory c);

// Uniform shuffle under seed, then contiguous slicing into
// round(n*r0) / round(n*r1) / remainder. Ratios must sum to 1.
SplitSpec split_random(std::span<const SplitPair> items, std::array<double, 3> ratios,
                       std::uint64_t seed);

// Uniformly random node with 1 <= degree < t. DataError when none qualifies.
int select_root(const PpiNetwork& net, int t, std::uint64_t seed);

// `n` uniform distinct unordered non-edges (u != v), avoiding `exclude`.
// DataError when fewer than n candidates exist.
std::vector<std::pair<int, int>> sample_negatives(const PpiNetwork& net, std::size_t n,
                                                  std::span<const std::pair<int, int>> exclude,
                                                  std::uint64_t seed);

// The traversal-based partition: expand from a low-degree root (BFS frontier
// or DFS stack), collecting every edge incident to the current node, until at
// least target_test_positives edges are gathered. Binary networks get
// balanced sampled negatives for test and train; multilabel networks keep
// type bitsets and skip negatives. Validation is 25% of the remaining pairs,
// giving 60/20/20 overall when target_test_positives = 20% of |E|.
SplitSpec split_search(const PpiNetwork& net, SplitScheme mode, std::size_t target_test_positives,
                       int t, std::uint64_t seed);

// Full random-scheme split for a binary task: positive edges plus 1:1 sampled
// negatives, stratified so each fold is label-balanced.
SplitSpec binary_random_split(const PpiNetwork& net, std::array<double, 3> ratios,
                              std::uint64_t seed);

// Random-scheme split over the typed edge set (no negatives).
SplitSpec multilabel_random_split(const PpiNetwork& net, std::array<double, 3> ratios,
                                  std::uint64_t seed);

// BS: both endpoints incident to some train pair; ES: exactly one; NS: neither.
std::vector<PairCategory> categorize_bs_es_ns(const SplitSpec& split, int node_count);

// TSV rows "u<TAB>v<TAB>label<TAB>fold<TAB>bsesns" (+ JSON sidecar with
// scheme, seed, root, t, mode). Writes <base>.tsv and <base>.json.
void write_split(const SplitSpec& split, const PpiNetwork& net, const std::string& base_path);
SplitSpec read_split(const PpiNetwork& net, const std::string& base_path);

}  // namespace l3ppi
