#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "l3ppi/graph.hpp"
#include "l3ppi/prompt.hpp"
#include "l3ppi/split.hpp"

namespace l3ppi {

// Dense per-node feature rows aligned with a network's node indices.
using FeatureMatrix = std::vector<std::vector<double>>;

Tensor feature_row(const FeatureMatrix& features, int node);

// Pooled F1 over individual decisions: 2TP / (2TP + FP + FN), with the
// degenerate all-empty case scored 1.0. Multilabel callers flatten
// (sample, type) pairs before calling.
double micro_f1(std::span<const double> predictions, std::span<const int> labels,
                double threshold = 0.5);

struct ConfusionCounts {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct CategoryMetrics {
    std::size_t pairs = 0;
    double f1 = 0.0;
    ConfusionCounts confusion;
};

struct EvalMetrics {
    double overall_f1 = 0.0;
    ConfusionCounts confusion;
    std::size_t test_pairs = 0;
    // absent (not zero) when the split has no pairs of that category
    std::optional<CategoryMetrics> bs, es, ns;
};

// Deterministic inference-mode evaluation of the test fold, overall and per
// BS/ES/NS category. n_types = 0 for binary data.
EvalMetrics eval_split(const PromptModel& model, const SplitSpec& split,
                       const FeatureMatrix& features, int node_count, int n_types,
                       double threshold = 0.5, int workers = 1);

struct InferredVsActualRow {
    int u = 0, v = 0;
    int label = 0;
    std::int64_t actual = 0;  // #L3 paths capped at K
    int inferred = 0;         // sum_i 1[p_i > 0.5]
};

struct InferredVsActualResult {
    std::optional<double> rho;
    std::vector<InferredVsActualRow> rows;
};

// Figure-style comparison of gate activations against true path counts.
// Needs >= 2 pairs; degenerate variance yields an undefined correlation.
InferredVsActualResult inferred_vs_actual(const PromptModel& model, const PpiNetwork& net,
                                          std::span<const SplitPair> pairs,
                                          const FeatureMatrix& features, int workers = 1);

std::string inferred_vs_actual_csv(const PpiNetwork& net, const InferredVsActualResult& result);

}  // namespace l3ppi
