#include "l3ppi/split.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "l3ppi/errors.hpp"
#include "l3ppi/rng.hpp"

namespace l3ppi {

std::string to_string(SplitScheme s) {
    switch (s) {
        case SplitScheme::Random: return "random";
        case SplitScheme::Bfs: return "bfs";
        case SplitScheme::Dfs: return "dfs";
    }
    return "random";
}

SplitScheme split_scheme_from_string(const std::string& s) {
    if (s == "random") return SplitScheme::Random;
    if (s == "bfs") return SplitScheme::Bfs;
    if (s == "dfs") return SplitScheme::Dfs;
    throw ConfigError("unknown split scheme '" + s + "' (want random|bfs|dfs)");
}

std::string to_string(PairCategory c) {
    switch (c) {
        case PairCategory::BS: return "BS";
        case PairCategory::ES: return "ES";
        case PairCategory::NS: return "NS";
    }
    return "BS";
}

namespace {

void check_ratios(std::array<double, 3> ratios) {
    double sum = 0.0;
    for (double r : ratios) {
        if (r < 0.0 || r > 1.0) throw ConfigError("split ratios must lie in [0,1]");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
}

std::pair<int, int> canonical(int a, int b) { return a < b ? std::make_pair(a, b) : std::make_pair(b, a); }

}  // namespace

SplitSpec split_random(std::span<const SplitPair> items, std::array<double, 3> ratios,
                       std::uint64_t seed) {
    check_ratios(ratios);
    std::vector<SplitPair> shuffled(items.begin(), items.end());
    Rng rng = make_rng(derive_seed(seed, "split-random"));
    std::shuffle(shuffled.begin(), shuffled.end(), rng);

    const std::size_t n = shuffled.size();
    std::size_t n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
    std::size_t n_val = static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n)));
    n_train = std::min(n_train, n);
    n_val = std::min(n_val, n - n_train);

    SplitSpec spec;
    spec.scheme = SplitScheme::Random;
    spec.seed = seed;
    spec.train.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
    spec.val.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train),
                    shuffled.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    spec.test.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), shuffled.end());
    return spec;
}

int select_root(const PpiNetwork& net, int t, std::uint64_t seed) {
    std::vector<int> candidates;
    for (int v = 0; v < net.node_count(); ++v) {
        const int d = net.degree(v);
        if (d >= 1 && d < t) candidates.push_back(v);
    }
    if (candidates.empty())
        throw DataError("no qualifying root: need a node with 1 <= degree < " + std::to_string(t));
    Rng rng = make_rng(derive_seed(seed, "root"));
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    return candidates[pick(rng)];
}

std::vector<std::pair<int, int>> sample_negatives(const PpiNetwork& net, std::size_t n,
                                                  std::span<const std::pair<int, int>> exclude,
                                                  std::uint64_t seed) {
    const std::int64_t nodes = net.node_count();
    const std::int64_t total = nodes * (nodes - 1) / 2;

    std::set<std::pair<int, int>> excluded;
    for (const auto& [a, b] : exclude) excluded.insert(canonical(a, b));
    std::int64_t excluded_non_edges = 0;
    for (const auto& p : excluded)
        if (!net.has_edge(p.first, p.second)) ++excluded_non_edges;
    const std::int64_t available =
        total - static_cast<std::int64_t>(net.edge_count()) - excluded_non_edges;
    if (available < static_cast<std::int64_t>(n))
        throw DataError("sample_negatives: only " + std::to_string(std::max<std::int64_t>(available, 0)) +
                        " non-edges available, need " + std::to_string(n));

    Rng rng = make_rng(derive_seed(seed, "negatives"));
    std::vector<std::pair<int, int>> out;
    out.reserve(n);

    // dense regime: enumerate candidates and shuffle
    if (available < static_cast<std::int64_t>(4 * n) || nodes <= 64) {
        std::vector<std::pair<int, int>> candidates;
        candidates.reserve(static_cast<std::size_t>(available));
        for (int a = 0; a < nodes; ++a)
            for (int b = a + 1; b < nodes; ++b)
                if (!net.has_edge(a, b) && !excluded.count({a, b})) candidates.emplace_back(a, b);
        std::shuffle(candidates.begin(), candidates.end(), rng);
        out.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n));
        return out;
    }

    std::uniform_int_distribution<int> pick(0, net.node_count() - 1);
    std::set<std::pair<int, int>> chosen;
    while (chosen.size() < n) {
        int a = pick(rng);
        int b = pick(rng);
        if (a == b) continue;
        auto p = canonical(a, b);
        if (net.has_edge(p.first, p.second) || excluded.count(p)) continue;
        if (chosen.insert(p).second) out.push_back(p);
    }
    return out;
}

namespace {

// Algorithm: take all edges incident to the current node, then advance via
// the search frontier (FIFO for BFS; stack for DFS, pushed in descending
// index so lower indices pop first).
std::vector<SplitPair> traverse_test_positives(const PpiNetwork& net, SplitScheme mode, int root,
                                               std::size_t target) {
    std::set<std::pair<int, int>> collected;
    std::vector<SplitPair> ordered;
    std::vector<std::uint8_t> discovered(static_cast<std::size_t>(net.node_count()), 0);
    std::deque<int> frontier;
    discovered[static_cast<std::size_t>(root)] = 1;

    int cur = root;
    while (true) {
        for (int nb : net.neighbors(cur)) {
            auto p = canonical(cur, nb);
            if (collected.insert(p).second)
                ordered.push_back({p.first, p.second, net.edge_types(p.first, p.second).value_or(1)});
        }
        if (mode == SplitScheme::Bfs) {
            for (int nb : net.neighbors(cur)) {
                if (!discovered[static_cast<std::size_t>(nb)]) {
                    discovered[static_cast<std::size_t>(nb)] = 1;
                    frontier.push_back(nb);
                }
            }
        } else {
            const auto nbrs = net.neighbors(cur);
            for (auto it = nbrs.rbegin(); it != nbrs.rend(); ++it) {
                if (!discovered[static_cast<std::size_t>(*it)]) {
                    discovered[static_cast<std::size_t>(*it)] = 1;
                    frontier.push_back(*it);
                }
            }
        }
        if (collected.size() >= target) break;
        if (frontier.empty())
            throw DataError("split traversal exhausted its component with " +
                            std::to_string(collected.size()) + " of " + std::to_string(target) +
                            " test positives");
        if (mode == SplitScheme::Bfs) {
            cur = frontier.front();
            frontier.pop_front();
        } else {
            cur = frontier.back();
            frontier.pop_back();
        }
    }
    return ordered;
}

}  // namespace

SplitSpec split_search(const PpiNetwork& net, SplitScheme mode, std::size_t target_test_positives,
                       int t, std::uint64_t seed) {
    if (mode == SplitScheme::Random)
        throw ConfigError("split_search requires scheme bfs or dfs");
    if (target_test_positives < 1) throw ConfigError("target_test_positives must be >= 1");
    if (target_test_positives > net.edge_count())
        throw DataError("target_test_positives exceeds edge count");

    SplitSpec spec;
    spec.scheme = mode;
    spec.seed = seed;
    spec.root_threshold = t;
    const int root = select_root(net, t, seed);
    spec.root = root;

    std::vector<SplitPair> test_pos = traverse_test_positives(net, mode, root, target_test_positives);
    std::set<std::pair<int, int>> test_pos_set;
    for (const SplitPair& p : test_pos) test_pos_set.insert({p.u, p.v});

    std::vector<SplitPair> remaining_pos;
    for (const EdgeRec& e : net.edges()) {
        if (!test_pos_set.count({e.u, e.v}))
            remaining_pos.push_back({e.u, e.v, net.mode() == NetworkMode::Multilabel ? e.types : 1});
    }

    const bool binary = net.mode() == NetworkMode::Binary;
    std::vector<SplitPair> remaining;
    if (binary) {
        for (SplitPair& p : test_pos) p.label = 1;

        auto test_neg = sample_negatives(net, test_pos.size(), {}, derive_seed(seed, "test-neg"));
        for (const auto& [a, b] : test_neg) spec.test.push_back({a, b, 0});
        spec.test.insert(spec.test.end(), test_pos.begin(), test_pos.end());

        std::vector<std::pair<int, int>> exclude;
        exclude.reserve(spec.test.size());
        for (const SplitPair& p : spec.test) exclude.emplace_back(p.u, p.v);
        auto train_neg =
            sample_negatives(net, remaining_pos.size(), exclude, derive_seed(seed, "train-neg"));

        remaining = remaining_pos;
        for (const auto& [a, b] : train_neg) remaining.push_back({a, b, 0});
    } else {
        spec.test = test_pos;
        remaining = remaining_pos;
    }

    // validation: uniform 25% of the remaining pairs (60/20/20 overall)
    Rng rng = make_rng(derive_seed(seed, "val"));
    std::shuffle(remaining.begin(), remaining.end(), rng);
    const std::size_t n_val =
        static_cast<std::size_t>(std::llround(0.25 * static_cast<double>(remaining.size())));
    spec.val.assign(remaining.begin(), remaining.begin() + static_cast<std::ptrdiff_t>(n_val));
    spec.train.assign(remaining.begin() + static_cast<std::ptrdiff_t>(n_val), remaining.end());
    return spec;
}

SplitSpec binary_random_split(const PpiNetwork& net, std::array<double, 3> ratios,
                              std::uint64_t seed) {
    check_ratios(ratios);
    std::vector<SplitPair> positives;
    positives.reserve(net.edge_count());
    for (const EdgeRec& e : net.edges()) positives.push_back({e.u, e.v, 1});

    auto negatives_raw =
        sample_negatives(net, positives.size(), {}, derive_seed(seed, "random-neg"));
    std::vector<SplitPair> negatives;
    negatives.reserve(negatives_raw.size());
    for (const auto& [a, b] : negatives_raw) negatives.push_back({a, b, 0});

    // stratified: label balance holds exactly in every fold
    SplitSpec pos = split_random(positives, ratios, derive_seed(seed, "pos"));
    SplitSpec neg = split_random(negatives, ratios, derive_seed(seed, "neg"));

    SplitSpec spec;
    spec.scheme = SplitScheme::Random;
    spec.seed = seed;
    auto merge = [](std::vector<SplitPair>& dst, const std::vector<SplitPair>& a,
                    const std::vector<SplitPair>& b) {
        dst = a;
        dst.insert(dst.end(), b.begin(), b.end());
    };
    merge(spec.train, pos.train, neg.train);
    merge(spec.val, pos.val, neg.val);
    merge(spec.test, pos.test, neg.test);
    return spec;
}

SplitSpec multilabel_random_split(const PpiNetwork& net, std::array<double, 3> ratios,
                                  std::uint64_t seed) {
    std::vector<SplitPair> items;
    items.reserve(net.edge_count());
    for (const EdgeRec& e : net.edges()) items.push_back({e.u, e.v, e.types});
    SplitSpec spec = split_random(items, ratios, seed);
    spec.seed = seed;
    return spec;
}

std::vector<PairCategory> categorize_bs_es_ns(const SplitSpec& split, int node_count) {
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(node_count), 0);
    for (const SplitPair& p : split.train) {
        seen[static_cast<std::size_t>(p.u)] = 1;
        seen[static_cast<std::size_t>(p.v)] = 1;
    }
    std::vector<PairCategory> tags;
    tags.reserve(split.test.size());
    for (const SplitPair& p : split.test) {
        const int hits = seen[static_cast<std::size_t>(p.u)] + seen[static_cast<std::size_t>(p.v)];
        tags.push_back(hits == 2 ? PairCategory::BS : hits == 1 ? PairCategory::ES : PairCategory::NS);
    }
    return tags;
}

namespace {

std::string label_field(const PpiNetwork& net, TypeBitset label) {
    if (net.mode() == NetworkMode::Binary) return label ? "1" : "0";
    std::string out;
    for (std::size_t t = 0; t < net.type_names().size(); ++t) {
        if (label & (TypeBitset{1} << t)) {
            if (!out.empty()) out += ',';
            out += net.type_names()[t];
        }
    }
    return out;
}

TypeBitset parse_label_field(const PpiNetwork& net, const std::string& field, std::size_t line_no) {
    if (net.mode() == NetworkMode::Binary) {
        if (field == "0") return 0;
        if (field == "1") return 1;
        throw DataError("bad binary label at split line " + std::to_string(line_no));
    }
    TypeBitset bits = 0;
    std::stringstream ss(field);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        auto it = std::find(net.type_names().begin(), net.type_names().end(), tok);
        if (it == net.type_names().end())
            throw DataError("unknown type '" + tok + "' at split line " + std::to_string(line_no));
        bits |= TypeBitset{1} << (it - net.type_names().begin());
    }
    if (bits == 0) throw DataError("empty multilabel label at split line " + std::to_string(line_no));
    return bits;
}

}  // namespace

void write_split(const SplitSpec& split, const PpiNetwork& net, const std::string& base_path) {
    std::ofstream tsv(base_path + ".tsv", std::ios::binary);
    if (!tsv) throw DataError("cannot write split file: " + base_path + ".tsv");

    const std::vector<PairCategory> tags = categorize_bs_es_ns(split, net.node_count());
    auto write_fold = [&](const std::vector<SplitPair>& pairs, const char* fold, bool tagged) {
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const SplitPair& p = pairs[i];
            tsv << net.node_id(p.u) << '\t' << net.node_id(p.v) << '\t' << label_field(net, p.label)
                << '\t' << fold << '\t' << (tagged ? to_string(tags[i]) : "-") << '\n';
        }
    };
    write_fold(split.train, "train", false);
    write_fold(split.val, "val", false);
    write_fold(split.test, "test", true);

    nlohmann::json sidecar;
    sidecar["scheme"] = to_string(split.scheme);
    sidecar["seed"] = split.seed;
    sidecar["t"] = split.root_threshold;
    sidecar["mode"] = net.mode() == NetworkMode::Binary ? "binary" : "multilabel";
    if (split.root)
        sidecar["root"] = net.node_id(*split.root);
    else
        sidecar["root"] = nullptr;
    std::ofstream js(base_path + ".json", std::ios::binary);
    if (!js) throw DataError("cannot write split sidecar: " + base_path + ".json");
    js << sidecar.dump(2) << '\n';
}

SplitSpec read_split(const PpiNetwork& net, const std::string& base_path) {
    std::ifstream js(base_path + ".json");
    if (!js) throw DataError("cannot open split sidecar: " + base_path + ".json");
    nlohmann::json sidecar = nlohmann::json::parse(js, nullptr, true);

    SplitSpec spec;
    spec.scheme = split_scheme_from_string(sidecar.at("scheme").get<std::string>());
    spec.seed = sidecar.at("seed").get<std::uint64_t>();
    spec.root_threshold = sidecar.at("t").get<int>();
    if (!sidecar.at("root").is_null()) {
        const std::string root_id = sidecar.at("root").get<std::string>();
        auto idx = net.node_index(root_id);
        if (!idx) throw DataError("split root protein not in network: " + root_id);
        spec.root = *idx;
    }

    std::ifstream tsv(base_path + ".tsv");
    if (!tsv) throw DataError("cannot open split file: " + base_path + ".tsv");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(tsv, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        while (true) {
            std::size_t pos = line.find('\t', start);
            if (pos == std::string::npos) {
                cols.push_back(line.substr(start));
                break;
            }
            cols.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        if (cols.size() != 5) throw DataError("malformed split line " + std::to_string(line_no));
        auto ui = net.node_index(cols[0]);
        auto vi = net.node_index(cols[1]);
        if (!ui || !vi)
            throw DataError("split references protein absent from network at line " +
                            std::to_string(line_no));
        SplitPair p{*ui, *vi, parse_label_field(net, cols[2], line_no)};
        if (cols[3] == "train")
            spec.train.push_back(p);
        else if (cols[3] == "val")
            spec.val.push_back(p);
        else if (cols[3] == "test")
            spec.test.push_back(p);
        else
            throw DataError("unknown fold '" + cols[3] + "' at line " + std::to_string(line_no));
    }
    return spec;
}

}  // namespace l3ppi
