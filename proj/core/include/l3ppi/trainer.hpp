#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "l3ppi/metrics.hpp"
#include "l3ppi/prompt.hpp"
#include "l3ppi/split.hpp"

namespace l3ppi {

// ---- losses -----------------------------------------------------------------

// Binary cross entropy, probabilities clamped to [1e-7, 1-1e-7], averaged
// over every (sample, output) element.
Tensor bce_loss(const Tensor& probs, std::span<const double> targets);

// Path-number hinge: interacting pairs are pushed to sum(p) >= K(1 - 1/gamma),
// non-interacting pairs to sum(p) <= K/gamma. Requires gamma > 1.
Tensor pn_loss(const Tensor& gate_probs, int y_bin, int path_budget, double gamma);

// 1 iff the (possibly multilabel) label encodes an interaction.
int interaction_indicator(TypeBitset label);

// ---- batched gradient accumulation --------------------------------------------

// Runs backward over each sample loss with seed 1/|indices| so leaf grads
// accumulate the gradient of the mean loss; returns the mean loss value.
// workers > 1 processes contiguous chunks in parallel and merges per-chunk
// gradient sinks in chunk order, so results are deterministic per worker
// count (and bit-identical to serial when workers == 1).
double accumulate_batch(std::span<const std::size_t> indices,
                        const std::function<Tensor(std::size_t)>& sample_loss,
                        std::span<const Tensor> params, int workers);

// ---- prompt tuning ------------------------------------------------------------

// Appendix training strategies.
enum class Strategy { POnly, GOnly, JointPG, PThenG, GThenP, IterPG };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);  // "P","G","P&G","P->G","G->P","IterPG"

struct TuneConfig {
    int path_budget = 16;  // K
    double gamma = 2.0;
    double lambda_pn = 0.3;
    double lr = 1e-3;
    int batch_size = 16;
    int stage1_max_epochs = 100;
    int stage2_max_epochs = 60;
    Strategy strategy = Strategy::PThenG;
    std::uint64_t seed = 0;
    // temperature schedule tau_e = max(tau_min, tau0 * tau_decay^e), counted
    // from the first epoch with live gates
    double tau0 = 1.0;
    double tau_decay = 0.97;
    double tau_min = 0.1;
    // convergence: range of epoch-mean train loss over the window below delta
    double convergence_delta = 0.05;
    int convergence_window = 10;
    double dropout = 0.0;
    int workers = 1;
};

struct TuneEpochStats {
    int stage = 0;
    int epoch = 0;  // within stage
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_f1 = 0.0;
    double mean_active_paths_pos = 0.0;  // NaN when the fold has no positives
    double mean_active_paths_neg = 0.0;  // NaN when no negatives
    double tau = 0.0;
};

struct TuneResult {
    PromptModel model;  // best-validation checkpoint of the final stage
    std::vector<TuneEpochStats> history;
    int best_stage = 0;
    int best_epoch = 0;
    double best_val_f1 = 0.0;
};

// Two-stage (or single-stage) prompt tuning against a frozen surrogate.
// n_types = 0 for binary data; multilabel uses elementwise BCE over types and
// interaction_indicator for the path-number loss.
TuneResult tune(std::span<const SplitPair> train_pairs, std::span<const SplitPair> val_pairs,
                const PromptModel& initial, const FeatureMatrix& features, int n_types,
                const TuneConfig& cfg);

std::string history_jsonl(std::span<const TuneEpochStats> history);

}  // namespace l3ppi
