#include "l3ppi/pretrain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "l3ppi/census.hpp"
#include "l3ppi/errors.hpp"
#include "l3ppi/rng.hpp"
#include "l3ppi/split.hpp"
#include "l3ppi/trainer.hpp"

namespace l3ppi {

namespace {

// reservoir-sample up to cap paths for one pair, deterministic per pair seed
void collect_pair_paths(const PpiNetwork& net, int u, int v, TypeBitset label, int cap,
                        std::uint64_t pair_seed, std::vector<PretrainSample>& out) {
    std::vector<std::vector<int>> paths = enumerate_simple_paths(net, u, v, 3, true);
    if (paths.empty()) return;

    std::vector<std::size_t> keep;
    if (static_cast<int>(paths.size()) <= cap) {
        keep.resize(paths.size());
        for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
    } else {
        Rng rng = make_rng(pair_seed);
        keep.resize(static_cast<std::size_t>(cap));
        for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
        for (std::size_t i = keep.size(); i < paths.size(); ++i) {
            std::uniform_int_distribution<std::size_t> pick(0, i);
            const std::size_t j = pick(rng);
            if (j < keep.size()) keep[j] = i;
        }
        std::sort(keep.begin(), keep.end());
    }
    for (std::size_t i : keep) {
        PretrainSample s;
        s.nodes = {paths[i][0], paths[i][1], paths[i][2], paths[i][3]};
        s.label = label;
        out.push_back(s);
    }
}

}  // namespace

PretrainDataset build_pretrain_dataset(const PpiNetwork& net, const EmbeddingTable& embs,
                                       int n_neg_pairs, int per_pair_cap, std::uint64_t seed,
                                       std::span<const std::pair<int, int>> exclude_negatives) {
    if (per_pair_cap < 1) throw ConfigError("pretrain dataset: per_pair_cap must be >= 1");
    if (n_neg_pairs < 0) throw ConfigError("pretrain dataset: n_neg_pairs must be >= 0");
    // fail early on missing proteins rather than mid-training
    (void)embs.aligned_to(net);

    PretrainDataset dataset;
    dataset.n_types = net.mode() == NetworkMode::Multilabel
                          ? static_cast<int>(net.type_names().size())
                          : 0;

    const std::uint64_t cap_seed = derive_seed(seed, "pretrain-cap");
    std::uint64_t pair_index = 0;
    for (const EdgeRec& e : net.edges()) {
        const TypeBitset label = net.mode() == NetworkMode::Multilabel ? e.types : 1;
        collect_pair_paths(net, e.u, e.v, label, per_pair_cap, mix_index(cap_seed, pair_index),
                           dataset.samples);
        ++pair_index;
    }

    if (n_neg_pairs > 0) {
        auto negatives = sample_negatives(net, static_cast<std::size_t>(n_neg_pairs),
                                          exclude_negatives, derive_seed(seed, "pretrain-neg"));
        for (const auto& [a, b] : negatives) {
            collect_pair_paths(net, a, b, 0, per_pair_cap, mix_index(cap_seed, pair_index),
                               dataset.samples);
            ++pair_index;
        }
    }

    if (dataset.samples.empty())
        throw DataError("pretrain dataset: the network has no length-3 paths at all");
    return dataset;
}

namespace {

constexpr char kCacheMagic[8] = {'L', '3', 'P', 'P', 'I', 'D', 'S', 'C'};
constexpr std::uint32_t kCacheVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "dataset cache assumes a little-endian host");

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool get(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return static_cast<bool>(in);
}

}  // namespace

void save_pretrain_cache(const std::string& path, const PretrainDataset& dataset,
                         std::uint64_t seed, int n_neg_pairs, int per_pair_cap,
                         std::size_t edge_count) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write dataset cache: " + path);
    out.write(kCacheMagic, sizeof(kCacheMagic));
    put(out, kCacheVersion);
    put(out, seed);
    put(out, static_cast<std::int32_t>(n_neg_pairs));
    put(out, static_cast<std::int32_t>(per_pair_cap));
    put(out, static_cast<std::uint64_t>(edge_count));
    put(out, static_cast<std::int32_t>(dataset.n_types));
    put(out, static_cast<std::uint64_t>(dataset.samples.size()));
    for (const PretrainSample& s : dataset.samples) {
        for (int node : s.nodes) put(out, static_cast<std::int32_t>(node));
        put(out, s.label);
    }
}

bool load_pretrain_cache(const std::string& path, std::uint64_t seed, int n_neg_pairs,
                         int per_pair_cap, std::size_t edge_count, PretrainDataset& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCacheMagic, sizeof(kCacheMagic)) != 0) return false;
    std::uint32_t version;
    std::uint64_t stamp_seed, stamp_edges, count;
    std::int32_t stamp_neg, stamp_cap, n_types;
    if (!get(in, version) || version != kCacheVersion) return false;
    if (!get(in, stamp_seed) || !get(in, stamp_neg) || !get(in, stamp_cap) ||
        !get(in, stamp_edges) || !get(in, n_types) || !get(in, count))
        return false;
    if (stamp_seed != seed || stamp_neg != n_neg_pairs || stamp_cap != per_pair_cap ||
        stamp_edges != edge_count)
        return false;

    PretrainDataset dataset;
    dataset.n_types = n_types;
    dataset.samples.resize(count);
    for (auto& s : dataset.samples) {
        for (int& node : s.nodes) {
            std::int32_t x;
            if (!get(in, x)) return false;
            node = x;
        }
        if (!get(in, s.label)) return false;
    }
    out = std::move(dataset);
    return true;
}

WeightedGraph pretrain_sample_graph(const PretrainSample& sample, const FeatureMatrix& features) {
    const std::size_t d = features.at(0).size();
    std::vector<double> rows;
    rows.reserve(4 * d);
    for (int node : sample.nodes) {
        const auto& r = features.at(static_cast<std::size_t>(node));
        rows.insert(rows.end(), r.begin(), r.end());
    }
    Tensor feats = Tensor::from_data({4, static_cast<int>(d)}, std::move(rows));
    return make_weighted_graph(std::move(feats), {{0, 1}, {1, 2}, {2, 3}});
}

namespace {

std::vector<double> sample_target(const PretrainSample& s, int n_types) {
    if (n_types <= 0) return {s.label != 0 ? 1.0 : 0.0};
    std::vector<double> y(static_cast<std::size_t>(n_types), 0.0);
    for (int t = 0; t < n_types; ++t)
        if ((s.label >> t) & 1u) y[static_cast<std::size_t>(t)] = 1.0;
    return y;
}

}  // namespace

PretrainResult pretrain(const PretrainDataset& dataset, const FeatureMatrix& features,
                        const PretrainConfig& cfg) {
    if (dataset.samples.empty()) throw DataError("pretrain: empty dataset");
    bool has_pos = false, has_neg = false;
    for (const PretrainSample& s : dataset.samples) {
        (s.label != 0 ? has_pos : has_neg) = true;
        if (has_pos && has_neg) break;
    }
    if (!has_pos || !has_neg)
        throw DataError("pretrain: dataset must contain both interacting and non-interacting paths");

    const int feature_dim = static_cast<int>(features.at(0).size());
    const int out_dim = dataset.n_types > 0 ? dataset.n_types : 1;

    const SeedStreams seeds{cfg.seed};
    Rng init_rng = make_rng(seeds.init());
    SurrogateModel model = make_surrogate(feature_dim, cfg.gin, out_dim, init_rng);
    std::vector<Tensor> params = surrogate_parameters(model);

    // train/val partition of sample indices
    std::vector<std::size_t> indices(dataset.samples.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    Rng split_rng = make_rng(derive_seed(seeds.data(), "pretrain-val"));
    std::shuffle(indices.begin(), indices.end(), split_rng);
    std::size_t n_val = static_cast<std::size_t>(
        std::llround(cfg.val_fraction * static_cast<double>(indices.size())));
    n_val = std::min(std::max<std::size_t>(n_val, 1), indices.size() - 1);
    std::vector<std::size_t> val_idx(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train_idx(indices.begin() + static_cast<std::ptrdiff_t>(n_val), indices.end());

    AdamConfig adam_cfg;
    adam_cfg.lr = cfg.lr;
    Adam opt(params, adam_cfg);
    Rng shuffle_rng = make_rng(derive_seed(seeds.data(), "pretrain-shuffle"));

    PretrainResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    SurrogateModel best = clone_surrogate(model);

    std::uint64_t sample_counter = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), shuffle_rng);
        double epoch_loss = 0.0;
        std::size_t correct = 0, decisions = 0;
        std::size_t batches = 0;

        const std::uint64_t epoch_base = sample_counter;
        std::vector<std::size_t> positions(train_idx.size());
        for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;

        for (std::size_t start = 0; start < train_idx.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(train_idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::span<const std::size_t> batch(positions.data() + start, stop - start);

            std::vector<double> batch_correct(batch.size(), 0.0);
            std::vector<double> batch_decisions(batch.size(), 0.0);
            auto sample_loss = [&](std::size_t pos) -> Tensor {
                const PretrainSample& s = dataset.samples[train_idx[pos]];
                Rng dropout_rng = make_rng(mix_index(seeds.dropout(), epoch_base + pos));
                DropoutCtx ctx{cfg.gin.dropout, &dropout_rng, cfg.gin.dropout > 0.0};
                WeightedGraph g = pretrain_sample_graph(s, features);
                Tensor probs =
                    surrogate_forward(model, g, cfg.gin.dropout > 0.0 ? &ctx : nullptr);
                const std::vector<double> y = sample_target(s, dataset.n_types);
                const auto pd = probs.data();
                for (std::size_t t = 0; t < y.size(); ++t) {
                    batch_decisions[pos - start] += 1.0;
                    if ((pd[t] > 0.5) == (y[t] > 0.5)) batch_correct[pos - start] += 1.0;
                }
                return bce_loss(probs, y);
            };

            for (Tensor& p : params) p.zero_grad();
            epoch_loss += accumulate_batch(batch, sample_loss, params, cfg.workers);
            ++batches;
            opt.step();
            for (double c : batch_correct) correct += static_cast<std::size_t>(c);
            for (double dcount : batch_decisions) decisions += static_cast<std::size_t>(dcount);
        }
        sample_counter = epoch_base + train_idx.size();

        double val_loss = 0.0;
        for (std::size_t idx : val_idx) {
            const PretrainSample& s = dataset.samples[idx];
            WeightedGraph g = pretrain_sample_graph(s, features);
            Tensor probs = surrogate_forward(model, g, nullptr);
            val_loss += bce_loss(probs, sample_target(s, dataset.n_types)).value();
        }
        val_loss /= static_cast<double>(val_idx.size());

        PretrainEpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss / static_cast<double>(std::max<std::size_t>(batches, 1));
        stats.train_acc =
            decisions ? static_cast<double>(correct) / static_cast<double>(decisions) : 0.0;
        stats.val_loss = val_loss;
        result.history.push_back(stats);

        if (val_loss < result.best_val_loss) {
            result.best_val_loss = val_loss;
            result.best_epoch = epoch;
            best = clone_surrogate(model);
        }
    }

    result.model = std::move(best);
    return result;
}

std::string pretrain_history_jsonl(std::span<const PretrainEpochStats> history) {
    std::ostringstream out;
    for (const PretrainEpochStats& h : history) {
        nlohmann::json rec;
        rec["epoch"] = h.epoch;
        rec["train_loss"] = h.train_loss;
        rec["train_acc"] = h.train_acc;
        rec["val_loss"] = h.val_loss;
        out << rec.dump() << '\n';
    }
    return out.str();
}

}  // namespace l3ppi
