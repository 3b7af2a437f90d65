#include "l3ppi/metrics.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "l3ppi/census.hpp"
#include "l3ppi/errors.hpp"

namespace l3ppi {

Tensor feature_row(const FeatureMatrix& features, int node) {
    return Tensor::from_row(features.at(static_cast<std::size_t>(node)));
}

double micro_f1(std::span<const double> predictions, std::span<const int> labels,
                double threshold) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("micro_f1: length mismatch");
    if (predictions.empty()) throw std::invalid_argument("micro_f1: empty input");
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool pred = predictions[i] > threshold;
        const bool truth = labels[i] != 0;
        if (pred && truth)
            ++tp;
        else if (pred && !truth)
            ++fp;
        else if (!pred && truth)
            ++fn;
    }
    if (tp == 0 && fp == 0 && fn == 0) return 1.0;
    return 2.0 * static_cast<double>(tp) /
           static_cast<double>(2 * tp + fp + fn);
}

namespace {

struct PairOutputs {
    std::vector<double> probs;  // out_dim entries
    int inferred = 0;
};

std::vector<PairOutputs> run_inference(const PromptModel& model,
                                       std::span<const SplitPair> pairs,
                                       const FeatureMatrix& features, bool want_active,
                                       int workers) {
    std::vector<PairOutputs> out(pairs.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Tensor u = feature_row(features, pairs[i].u);
            Tensor v = feature_row(features, pairs[i].v);
            PredictOptions opts;  // inference: hard gates, no noise, no dropout
            Prediction pred = predict(model, u, v, opts);
            out[i].probs.assign(pred.output.data().begin(), pred.output.data().end());
            if (want_active) {
                if (pred.probs.defined()) {
                    for (double p : pred.probs.data())
                        if (p > 0.5) ++out[i].inferred;
                } else {
                    out[i].inferred = model.bank.path_budget;  // gates bypassed: all open
                }
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
    return out;
}

void flatten_decisions(const PairOutputs& po, const SplitPair& pair, int n_types,
                       std::vector<double>& probs, std::vector<int>& labels) {
    if (n_types <= 0) {
        probs.push_back(po.probs.at(0));
        labels.push_back(pair.label != 0 ? 1 : 0);
        return;
    }
    for (int t = 0; t < n_types; ++t) {
        probs.push_back(po.probs.at(static_cast<std::size_t>(t)));
        labels.push_back((pair.label >> t) & 1u);
    }
}

ConfusionCounts confusion_of(std::span<const double> probs, std::span<const int> labels,
                             double threshold) {
    ConfusionCounts c;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const bool pred = probs[i] > threshold;
        const bool truth = labels[i] != 0;
        if (pred && truth)
            ++c.tp;
        else if (pred && !truth)
            ++c.fp;
        else if (!pred && truth)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

}  // namespace

EvalMetrics eval_split(const PromptModel& model, const SplitSpec& split,
                       const FeatureMatrix& features, int node_count, int n_types,
                       double threshold, int workers) {
    EvalMetrics metrics;
    metrics.test_pairs = split.test.size();
    if (split.test.empty()) return metrics;

    const std::vector<PairOutputs> outputs =
        run_inference(model, split.test, features, false, workers);
    const std::vector<PairCategory> tags = categorize_bs_es_ns(split, node_count);

    std::vector<double> all_probs;
    std::vector<int> all_labels;
    std::vector<double> cat_probs[3];
    std::vector<int> cat_labels[3];
    std::size_t cat_pairs[3] = {0, 0, 0};
    for (std::size_t i = 0; i < split.test.size(); ++i) {
        flatten_decisions(outputs[i], split.test[i], n_types, all_probs, all_labels);
        const int c = static_cast<int>(tags[i]);
        flatten_decisions(outputs[i], split.test[i], n_types, cat_probs[c], cat_labels[c]);
        ++cat_pairs[c];
    }

    metrics.overall_f1 = micro_f1(all_probs, all_labels, threshold);
    metrics.confusion = confusion_of(all_probs, all_labels, threshold);

    auto fill = [&](int c) -> std::optional<CategoryMetrics> {
        if (cat_pairs[c] == 0) return std::nullopt;
        CategoryMetrics cm;
        cm.pairs = cat_pairs[c];
        cm.f1 = micro_f1(cat_probs[c], cat_labels[c], threshold);
        cm.confusion = confusion_of(cat_probs[c], cat_labels[c], threshold);
        return cm;
    };
    metrics.bs = fill(static_cast<int>(PairCategory::BS));
    metrics.es = fill(static_cast<int>(PairCategory::ES));
    metrics.ns = fill(static_cast<int>(PairCategory::NS));
    return metrics;
}

InferredVsActualResult inferred_vs_actual(const PromptModel& model, const PpiNetwork& net,
                                          std::span<const SplitPair> pairs,
                                          const FeatureMatrix& features, int workers) {
    if (pairs.size() < 2)
        throw std::invalid_argument("inferred_vs_actual: need at least 2 pairs");
    const int K = model.bank.path_budget;

    const std::vector<PairOutputs> outputs = run_inference(model, pairs, features, true, workers);

    InferredVsActualResult result;
    result.rows.reserve(pairs.size());
    std::vector<double> xs(pairs.size()), ys(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        InferredVsActualRow row;
        row.u = pairs[i].u;
        row.v = pairs[i].v;
        row.label = pairs[i].label != 0 ? 1 : 0;
        // gates cannot exceed K active paths, so cap the true count to match
        row.actual = std::min<std::int64_t>(count_simple_paths(net, row.u, row.v, 3, true),
                                            static_cast<std::int64_t>(K));
        row.inferred = outputs[i].inferred;
        xs[i] = static_cast<double>(row.inferred);
        ys[i] = static_cast<double>(row.actual);
        result.rows.push_back(row);
    }
    result.rho = pearson(xs, ys);
    return result;
}

std::string inferred_vs_actual_csv(const PpiNetwork& net, const InferredVsActualResult& result) {
    std::ostringstream out;
    out << "u,v,label,actual_capped,inferred\n";
    for (const auto& row : result.rows) {
        out << net.node_id(row.u) << ',' << net.node_id(row.v) << ',' << row.label << ','
            << row.actual << ',' << row.inferred << '\n';
    }
    return out.str();
}

}  // namespace l3ppi
