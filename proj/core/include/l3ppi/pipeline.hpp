#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "l3ppi/graph.hpp"
#include "l3ppi/split.hpp"

namespace l3ppi {

// The graph visible at training time: the same node set with only the
// positive train edges. Pre-training and path counting must not see held-out
// interactions.
PpiNetwork train_network(const PpiNetwork& net, const SplitSpec& split);

// Pairs that must never be sampled as pre-training negatives (val/test folds).
std::vector<std::pair<int, int>> heldout_pairs(const SplitSpec& split);

// FNV-1a 64-bit digest of a file, hex-encoded; recorded in run manifests.
std::string file_digest(const std::string& path);

}  // namespace l3ppi
