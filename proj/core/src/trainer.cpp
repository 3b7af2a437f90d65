#include "l3ppi/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "l3ppi/errors.hpp"

namespace l3ppi {

Tensor bce_loss(const Tensor& probs, std::span<const double> targets) {
    if (probs.size() != targets.size()) throw std::invalid_argument("bce: shape mismatch");
    Tensor p = clamp(probs, 1e-7, 1.0 - 1e-7);
    Tensor y = Tensor::from_data(probs.shape(), {targets.begin(), targets.end()});
    Tensor one_minus_y = add_scalar(neg(y), 1.0);
    Tensor pos_term = mul(y, log_t(p));
    Tensor neg_term = mul(one_minus_y, log_t(add_scalar(neg(p), 1.0)));
    return neg(mean(add(pos_term, neg_term)));
}

Tensor pn_loss(const Tensor& gate_probs, int y_bin, int path_budget, double gamma) {
    if (gamma <= 1.0) throw ConfigError("pn_loss: gamma must exceed 1");
    const double k = static_cast<double>(path_budget);
    Tensor total = sum(gate_probs);
    if (y_bin != 0) {
        // max(0, K(1 - 1/gamma) - sum p)
        return relu(add_scalar(neg(total), k * (1.0 - 1.0 / gamma)));
    }
    // max(0, sum p - K/gamma)
    return relu(add_scalar(total, -k / gamma));
}

int interaction_indicator(TypeBitset label) { return label != 0 ? 1 : 0; }

double accumulate_batch(std::span<const std::size_t> indices,
                        const std::function<Tensor(std::size_t)>& sample_loss,
                        std::span<const Tensor> params, int workers) {
    if (indices.empty()) return 0.0;
    const double seed = 1.0 / static_cast<double>(indices.size());

    if (workers <= 1 || indices.size() < 2) {
        double total = 0.0;
        for (std::size_t idx : indices) {
            Tensor loss = sample_loss(idx);
            total += loss.value();
            backward(loss, seed);
        }
        return total / static_cast<double>(indices.size());
    }

    const std::size_t n = indices.size();
    const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::vector<GradSink> sinks(nthreads);
    std::vector<double> chunk_loss(nthreads, 0.0);
    std::vector<std::thread> threads;
    threads.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        threads.emplace_back([&, t]() {
            GradSinkScope scope(sinks[t]);
            const std::size_t begin = n * t / nthreads;
            const std::size_t end = n * (t + 1) / nthreads;
            for (std::size_t i = begin; i < end; ++i) {
                Tensor loss = sample_loss(indices[i]);
                chunk_loss[t] += loss.value();
                backward(loss, seed);
            }
        });
    }
    for (auto& th : threads) th.join();
    double total = 0.0;
    for (std::size_t t = 0; t < nthreads; ++t) {
        merge_grad_sink(sinks[t], params);
        total += chunk_loss[t];
    }
    return total / static_cast<double>(n);
}

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::POnly: return "P";
        case Strategy::GOnly: return "G";
        case Strategy::JointPG: return "P&G";
        case Strategy::PThenG: return "P->G";
        case Strategy::GThenP: return "G->P";
        case Strategy::IterPG: return "IterPG";
    }
    return "P->G";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "P") return Strategy::POnly;
    if (s == "G") return Strategy::GOnly;
    if (s == "P&G") return Strategy::JointPG;
    if (s == "P->G") return Strategy::PThenG;
    if (s == "G->P") return Strategy::GThenP;
    if (s == "IterPG") return Strategy::IterPG;
    throw ConfigError("unknown strategy '" + s + "' (want P|G|P&G|P->G|G->P|IterPG)");
}

namespace {

struct Stage {
    bool train_prompts = false;
    bool train_gating = false;
    bool gates_active = false;  // otherwise forced open, plain BCE
    bool alternate = false;     // IterPG: flip the trained set every epoch
    int max_epochs = 0;
    bool until_convergence = true;
};

std::vector<Stage> plan_stages(const TuneConfig& cfg) {
    const int e1 = cfg.stage1_max_epochs;
    const int e2 = cfg.stage2_max_epochs;
    switch (cfg.strategy) {
        case Strategy::POnly:
            return {{true, false, false, false, e1, true}};
        case Strategy::GOnly:
            return {{false, true, true, false, e1, true}};
        case Strategy::JointPG:
            return {{true, true, true, false, e1, true}};
        case Strategy::PThenG:
            return {{true, false, false, false, e1, true}, {true, true, true, false, e2, true}};
        case Strategy::GThenP:
            return {{false, true, true, false, e1, true}, {true, false, true, false, e2, true}};
        case Strategy::IterPG:
            return {{true, true, true, true, e1, true}};
    }
    throw ConfigError("unhandled strategy");
}

struct ConvergenceWindow {
    std::deque<double> window;
    int span;
    double delta;

    bool push(double loss) {
        window.push_back(loss);
        if (static_cast<int>(window.size()) > span) window.pop_front();
        if (static_cast<int>(window.size()) < span) return false;
        const auto [lo, hi] = std::minmax_element(window.begin(), window.end());
        return *hi - *lo < delta;
    }
};

std::vector<double> target_vector(TypeBitset label, int n_types) {
    if (n_types <= 0) return {label != 0 ? 1.0 : 0.0};
    std::vector<double> y(static_cast<std::size_t>(n_types), 0.0);
    for (int t = 0; t < n_types; ++t)
        if ((label >> t) & 1u) y[static_cast<std::size_t>(t)] = 1.0;
    return y;
}

struct ValReport {
    double loss = 0.0;
    double f1 = 0.0;
    double mean_active_pos = std::numeric_limits<double>::quiet_NaN();
    double mean_active_neg = std::numeric_limits<double>::quiet_NaN();
};

ValReport evaluate_fold(const PromptModel& model, bool gates_active,
                        std::span<const SplitPair> pairs, const FeatureMatrix& features,
                        int n_types, int workers) {
    ValReport report;
    if (pairs.empty()) return report;

    struct Slot {
        double loss = 0.0;
        std::vector<double> probs;
        int active = 0;
    };
    std::vector<Slot> slots(pairs.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Tensor u = feature_row(features, pairs[i].u);
            Tensor v = feature_row(features, pairs[i].v);
            PredictOptions opts;
            opts.force_gates_open = !gates_active;
            Prediction pred = predict(model, u, v, opts);
            const std::vector<double> y = target_vector(pairs[i].label, n_types);
            slots[i].loss = bce_loss(pred.output, y).value();
            slots[i].probs.assign(pred.output.data().begin(), pred.output.data().end());
            if (gates_active && pred.probs.defined()) {
                for (double p : pred.probs.data())
                    if (p > 0.5) ++slots[i].active;
            } else {
                slots[i].active = model.bank.path_budget;
            }
        }
    };
    const std::size_t n = pairs.size();
    if (workers <= 1 || n < 2) {
        work(0, n);
    } else {
        const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
        std::vector<std::thread> threads;
        for (std::size_t t = 0; t < nthreads; ++t)
            threads.emplace_back(work, n * t / nthreads, n * (t + 1) / nthreads);
        for (auto& th : threads) th.join();
    }

    std::vector<double> flat_probs;
    std::vector<int> flat_labels;
    double pos_active = 0.0, neg_active = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        report.loss += slots[i].loss;
        for (std::size_t t = 0; t < slots[i].probs.size(); ++t) {
            flat_probs.push_back(slots[i].probs[t]);
            flat_labels.push_back(n_types <= 0 ? (pairs[i].label != 0 ? 1 : 0)
                                               : static_cast<int>((pairs[i].label >> t) & 1u));
        }
        if (interaction_indicator(pairs[i].label)) {
            pos_active += slots[i].active;
            ++n_pos;
        } else {
            neg_active += slots[i].active;
            ++n_neg;
        }
    }
    report.loss /= static_cast<double>(n);
    report.f1 = micro_f1(flat_probs, flat_labels);
    if (n_pos > 0) report.mean_active_pos = pos_active / static_cast<double>(n_pos);
    if (n_neg > 0) report.mean_active_neg = neg_active / static_cast<double>(n_neg);
    return report;
}

}  // namespace

TuneResult tune(std::span<const SplitPair> train_pairs, std::span<const SplitPair> val_pairs,
                const PromptModel& initial, const FeatureMatrix& features, int n_types,
                const TuneConfig& cfg) {
    if (train_pairs.empty()) throw DataError("tune: empty training set");
    if (cfg.gamma <= 1.0) throw ConfigError("tune: gamma must exceed 1");
    if (cfg.lambda_pn < 0.0) throw ConfigError("tune: lambda_pn must be >= 0");
    if (cfg.path_budget < 1) throw ConfigError("tune: K must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("tune: batch size must be >= 1");
    if (cfg.stage1_max_epochs < 1 || cfg.stage2_max_epochs < 0)
        throw ConfigError("tune: bad stage epoch limits");

    const std::vector<Stage> stages = plan_stages(cfg);

    PromptModel model;
    model.surrogate = initial.surrogate;  // frozen: never passed to an optimizer
    model.bank = clone_prompt_bank(initial.bank);
    model.gating = clone_gating(initial.gating);
    model.use_gating = false;

    const SeedStreams seeds{cfg.seed};
    Rng shuffle_rng = make_rng(derive_seed(seeds.data(), "tune-shuffle"));

    TuneResult result;
    bool have_best = false;
    double best_val_loss = std::numeric_limits<double>::infinity();
    int gated_epochs = 0;  // drives the temperature schedule
    std::uint64_t sample_counter = 0;

    for (std::size_t stage_idx = 0; stage_idx < stages.size(); ++stage_idx) {
        const Stage& stage = stages[stage_idx];
        const bool final_stage = stage_idx + 1 == stages.size();
        if (stage.train_gating) model.use_gating = true;
        if (stage.max_epochs == 0) continue;

        std::vector<Tensor> prompt_params{model.bank.embeddings};
        std::vector<Tensor> gating_params = gating_parameters(model.gating);
        std::vector<Tensor> all_params = prompt_params;
        all_params.insert(all_params.end(), gating_params.begin(), gating_params.end());

        AdamConfig adam_cfg;
        adam_cfg.lr = cfg.lr;
        Adam prompt_opt(prompt_params, adam_cfg);
        Adam gating_opt(gating_params, adam_cfg);

        // best-val tracking covers the final stage only: the returned
        // checkpoint must carry the final stage's gating semantics
        if (final_stage) {
            have_best = false;
            best_val_loss = std::numeric_limits<double>::infinity();
        }

        ConvergenceWindow window{{}, cfg.convergence_window, cfg.convergence_delta};
        std::vector<std::size_t> order(train_pairs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

        for (int epoch = 0; epoch < stage.max_epochs; ++epoch) {
            const double tau =
                stage.gates_active
                    ? std::max(cfg.tau_min, cfg.tau0 * std::pow(cfg.tau_decay, gated_epochs))
                    : cfg.tau0;
            const bool update_prompts =
                stage.train_prompts && (!stage.alternate || epoch % 2 == 0);
            const bool update_gating =
                stage.train_gating && (!stage.alternate || epoch % 2 == 1);

            std::shuffle(order.begin(), order.end(), shuffle_rng);
            double epoch_loss = 0.0;
            std::size_t batches = 0;
            std::vector<std::size_t> positions(order.size());
            for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
            const std::uint64_t epoch_base = sample_counter;
            for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
                const std::size_t stop =
                    std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
                std::span<const std::size_t> batch(positions.data() + start, stop - start);

                auto sample_loss = [&](std::size_t pos) -> Tensor {
                    const SplitPair& pair = train_pairs[order[pos]];
                    // position within the epoch keys the per-sample noise streams
                    const std::uint64_t sample_id = epoch_base + pos;

                    Rng gumbel_rng = make_rng(mix_index(seeds.gumbel(), sample_id));
                    Rng dropout_rng = make_rng(mix_index(seeds.dropout(), sample_id));
                    DropoutCtx dropout_ctx{cfg.dropout, &dropout_rng, cfg.dropout > 0.0};

                    PredictOptions opts;
                    opts.training = true;
                    opts.tau = tau;
                    opts.gumbel_rng = stage.gates_active ? &gumbel_rng : nullptr;
                    opts.force_gates_open = !stage.gates_active;
                    opts.dropout_ctx = cfg.dropout > 0.0 ? &dropout_ctx : nullptr;

                    Tensor u = feature_row(features, pair.u);
                    Tensor v = feature_row(features, pair.v);
                    Prediction pred = predict(model, u, v, opts);
                    Tensor loss = bce_loss(pred.output, target_vector(pair.label, n_types));
                    if (stage.gates_active && cfg.lambda_pn > 0.0) {
                        Tensor reg = pn_loss(pred.probs, interaction_indicator(pair.label),
                                             cfg.path_budget, cfg.gamma);
                        loss = add(loss, mul_scalar(reg, cfg.lambda_pn));
                    }
                    return loss;
                };

                for (Tensor& p : all_params) p.zero_grad();
                epoch_loss += accumulate_batch(batch, sample_loss, all_params, cfg.workers);
                ++batches;

                if (update_prompts) prompt_opt.step();
                if (update_gating) gating_opt.step();
            }
            sample_counter = epoch_base + order.size();
            epoch_loss /= static_cast<double>(std::max<std::size_t>(batches, 1));
            if (stage.gates_active) ++gated_epochs;

            ValReport val = evaluate_fold(model, stage.gates_active, val_pairs, features, n_types,
                                          cfg.workers);

            TuneEpochStats stats;
            stats.stage = static_cast<int>(stage_idx) + 1;
            stats.epoch = epoch;
            stats.train_loss = epoch_loss;
            stats.val_loss = val.loss;
            stats.val_f1 = val.f1;
            stats.mean_active_paths_pos = val.mean_active_pos;
            stats.mean_active_paths_neg = val.mean_active_neg;
            stats.tau = tau;
            result.history.push_back(stats);

            if (final_stage) {
                const bool better = !have_best || val.f1 > result.best_val_f1 ||
                                    (val.f1 == result.best_val_f1 && val.loss < best_val_loss);
                if (better) {
                    have_best = true;
                    result.best_val_f1 = val.f1;
                    best_val_loss = val.loss;
                    result.best_stage = stats.stage;
                    result.best_epoch = epoch;
                    result.model.surrogate = model.surrogate;
                    result.model.bank = clone_prompt_bank(model.bank);
                    result.model.gating = clone_gating(model.gating);
                    result.model.use_gating = model.use_gating;
                }
            }

            if (stage.until_convergence && window.push(epoch_loss)) break;
        }
    }

    if (!have_best) {
        result.model = model;
        result.best_val_f1 = 0.0;
    }
    return result;
}

std::string history_jsonl(std::span<const TuneEpochStats> history) {
    std::ostringstream out;
    for (const TuneEpochStats& h : history) {
        nlohmann::json rec;
        rec["stage"] = h.stage;
        rec["epoch"] = h.epoch;
        rec["train_loss"] = h.train_loss;
        rec["val_loss"] = h.val_loss;
        rec["val_f1"] = h.val_f1;
        if (std::isnan(h.mean_active_paths_pos))
            rec["mean_active_paths_pos"] = nullptr;
        else
            rec["mean_active_paths_pos"] = h.mean_active_paths_pos;
        if (std::isnan(h.mean_active_paths_neg))
            rec["mean_active_paths_neg"] = nullptr;
        else
            rec["mean_active_paths_neg"] = h.mean_active_paths_neg;
        rec["tau"] = h.tau;
        out << rec.dump() << '\n';
    }
    return out.str();
}

}  // namespace l3ppi
