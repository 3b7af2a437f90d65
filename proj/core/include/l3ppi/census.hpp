#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "l3ppi/graph.hpp"

namespace l3ppi {

struct LabeledPair {
    int u = 0;
    int v = 0;
    int label = 0;  // 0/1
};

struct CensusRow {
    int u = 0;
    int v = 0;
    int label = 0;
    std::vector<std::int64_t> counts;  // counts[i] = #paths of edge-length (2 + i)
};

// Exact number of simple paths u -> v of edge-length k (all vertices
// distinct). With exclude_direct_edge the edge (u,v), if present, is ignored
// entirely; for simple paths it can only ever occur as the k=1 path itself.
// Depth-first enumeration pruned by a precomputed <=k-hop ball around v.
std::int64_t count_simple_paths(const PpiNetwork& net, int u, int v, int k,
                                bool exclude_direct_edge = false);

// Counts for every edge-length 1..k_max in one traversal; index [k-1] holds
// the length-k count. Equals per-k calls exactly.
std::vector<std::int64_t> count_simple_paths_upto(const PpiNetwork& net, int u, int v, int k_max,
                                                  bool exclude_direct_edge = false);

// Enumerates simple paths of edge-length exactly k as node sequences
// (u = first, v = last), in deterministic DFS order.
std::vector<std::vector<int>> enumerate_simple_paths(const PpiNetwork& net, int u, int v, int k,
                                                     bool exclude_direct_edge = false);

// One row per pair with counts for k = 2..k_max; the direct edge is always
// excluded so positive labels cannot leak into the counts. Parallelizes over
// pairs; output order matches input order for any worker count.
std::vector<CensusRow> census(const PpiNetwork& net, std::span<const LabeledPair> pairs,
                              int k_max, int workers = 1);

// Sample Pearson correlation; nullopt when either vector has zero variance
// ("undefined correlation" is a distinguished result, never NaN).
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);

// Bin mapping for the plug-in MI estimator: optional clipping of counts at a
// pooled percentile, then identity bins.
struct BinSpec {
    std::optional<double> clip_percentile;  // e.g. 0.95; nullopt = raw identity bins
};

// Plug-in mutual information (nats) between binned counts and binary labels;
// 0*log(0) terms are 0. Always >= 0 up to rounding; exactly 0 for constant labels.
double mutual_information(std::span<const std::int64_t> counts, std::span<const int> labels,
                          const BinSpec& binning = {});

struct L3Report {
    struct Row {
        int k = 0;
        std::optional<double> rho;
        double mi = 0.0;
    };
    std::vector<Row> rows;              // k = 2..k_max
    std::vector<CensusRow> census_rows;  // positives first, then negatives
};

// The full consolidation pipeline: sample n_pos edges and n_neg non-edges
// under `seed`, run the census, and compute (rho_k, MI_k) for k = 2..k_max.
// MI uses 95th-percentile clipping. Deterministic under seed.
L3Report l3_report(const PpiNetwork& net, int n_pos, int n_neg, int k_max, std::uint64_t seed,
                   int workers = 1);

// CSV:  u,v,label,L2,...,Lk  (one row per pair)
std::string census_csv(const PpiNetwork& net, std::span<const CensusRow> rows, int k_max);
// CSV:  k,pearson,mi  (pearson column is "NA" for undefined correlation)
std::string summary_csv(const L3Report& report);

}  // namespace l3ppi
