#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace l3ppi {

using Rng = std::mt19937_64;

// Mixes a master seed with a stream name so that independent consumers
// (data shuffling, parameter init, gumbel noise, dropout) never share a
// stream. Stable across runs: FNV-1a over the name, then splitmix64.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);

// Per-item sub-stream (e.g. one noise stream per sample) so results do not
// depend on how work is chunked across workers.
std::uint64_t mix_index(std::uint64_t seed, std::uint64_t index);

// Named seed streams materialized into every run manifest.
struct SeedStreams {
    std::uint64_t master = 0;

    std::uint64_t data() const { return derive_seed(master, "data"); }
    std::uint64_t init() const { return derive_seed(master, "init"); }
    std::uint64_t gumbel() const { return derive_seed(master, "gumbel"); }
    std::uint64_t dropout() const { return derive_seed(master, "dropout"); }
};

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace l3ppi
