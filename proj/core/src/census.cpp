#include "l3ppi/census.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "l3ppi/errors.hpp"
#include "l3ppi/rng.hpp"

namespace l3ppi {

namespace {

// BFS distances from v, capped at k_max (unreached = k_max + 1). Used only
// for pruning: dist <= remaining is necessary for any completion.
std::vector<int> hop_distances(const PpiNetwork& net, int v, int k_max) {
    std::vector<int> dist(static_cast<std::size_t>(net.node_count()), k_max + 1);
    dist[static_cast<std::size_t>(v)] = 0;
    std::deque<int> queue{v};
    while (!queue.empty()) {
        int cur = queue.front();
        queue.pop_front();
        if (dist[static_cast<std::size_t>(cur)] >= k_max) continue;
        for (int nxt : net.neighbors(cur)) {
            if (dist[static_cast<std::size_t>(nxt)] > k_max) {
                dist[static_cast<std::size_t>(nxt)] = dist[static_cast<std::size_t>(cur)] + 1;
                queue.push_back(nxt);
            }
        }
    }
    return dist;
}

struct PathSearch {
    const PpiNetwork& net;
    int source;
    int target;
    int k_max;
    bool exclude_direct;
    const std::vector<int>& dist_to_target;
    std::vector<std::uint8_t> on_path;
    std::vector<std::int64_t> counts;  // counts[k-1] = #paths of length k

    // collector for enumerate_simple_paths; null when only counting
    std::vector<int>* stack = nullptr;
    std::vector<std::vector<int>>* out_paths = nullptr;
    int enumerate_length = 0;

    bool direct_edge(int a, int b) const {
        return (a == source && b == target) || (a == target && b == source);
    }

    void run(int cur, int depth) {
        // final hop to the target closes a path of length depth+1
        if (depth + 1 <= k_max && net.has_edge(cur, target) &&
            !(exclude_direct && direct_edge(cur, target))) {
            counts[static_cast<std::size_t>(depth)] += 1;
            if (out_paths && depth + 1 == enumerate_length) {
                std::vector<int> path = *stack;
                path.push_back(target);
                out_paths->push_back(std::move(path));
            }
        }
        if (depth + 1 >= k_max) return;
        for (int nxt : net.neighbors(cur)) {
            if (nxt == target || on_path[static_cast<std::size_t>(nxt)]) continue;
            if (dist_to_target[static_cast<std::size_t>(nxt)] > k_max - depth - 1) continue;
            if (exclude_direct && direct_edge(cur, nxt)) continue;
            on_path[static_cast<std::size_t>(nxt)] = 1;
            if (stack) stack->push_back(nxt);
            run(nxt, depth + 1);
            if (stack) stack->pop_back();
            on_path[static_cast<std::size_t>(nxt)] = 0;
        }
    }
};

void check_pair_args(const PpiNetwork& net, int u, int v, int k) {
    if (k < 1) throw std::invalid_argument("path length k must be >= 1");
    if (u == v) throw std::invalid_argument("path endpoints must differ");
    if (u < 0 || u >= net.node_count() || v < 0 || v >= net.node_count())
        throw std::out_of_range("node index out of range");
}

}  // namespace

std::vector<std::int64_t> count_simple_paths_upto(const PpiNetwork& net, int u, int v, int k_max,
                                                  bool exclude_direct_edge) {
    check_pair_args(net, u, v, k_max);
    std::vector<int> dist = hop_distances(net, v, k_max);
    PathSearch search{net, u, v, k_max, exclude_direct_edge, dist,
                      std::vector<std::uint8_t>(static_cast<std::size_t>(net.node_count()), 0),
                      std::vector<std::int64_t>(static_cast<std::size_t>(k_max), 0)};
    search.on_path[static_cast<std::size_t>(u)] = 1;
    search.run(u, 0);
    return search.counts;
}

std::int64_t count_simple_paths(const PpiNetwork& net, int u, int v, int k,
                                bool exclude_direct_edge) {
    return count_simple_paths_upto(net, u, v, k, exclude_direct_edge)[static_cast<std::size_t>(k - 1)];
}

std::vector<std::vector<int>> enumerate_simple_paths(const PpiNetwork& net, int u, int v, int k,
                                                     bool exclude_direct_edge) {
    check_pair_args(net, u, v, k);
    std::vector<int> dist = hop_distances(net, v, k);
    PathSearch search{net, u, v, k, exclude_direct_edge, dist,
                      std::vector<std::uint8_t>(static_cast<std::size_t>(net.node_count()), 0),
                      std::vector<std::int64_t>(static_cast<std::size_t>(k), 0)};
    std::vector<int> stack{u};
    std::vector<std::vector<int>> paths;
    search.stack = &stack;
    search.out_paths = &paths;
    search.enumerate_length = k;
    search.on_path[static_cast<std::size_t>(u)] = 1;
    search.run(u, 0);
    return paths;
}

std::vector<CensusRow> census(const PpiNetwork& net, std::span<const LabeledPair> pairs,
                              int k_max, int workers) {
    if (k_max < 2) throw std::invalid_argument("census needs k_max >= 2");
    std::vector<CensusRow> rows(pairs.size());

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const LabeledPair& p = pairs[i];
            std::vector<std::int64_t> upto = count_simple_paths_upto(net, p.u, p.v, k_max, true);
            CensusRow& row = rows[i];
            row.u = p.u;
            row.v = p.v;
            row.label = p.label;
            row.counts.assign(upto.begin() + 1, upto.end());  // k = 2..k_max
        }
    };

    const std::size_t n = pairs.size();
    if (workers <= 1 || n < 2) {
        work(0, n);
        return rows;
    }
    const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::vector<std::thread> threads;
    threads.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        std::size_t begin = n * t / nthreads;
        std::size_t end = n * (t + 1) / nthreads;
        threads.emplace_back(work, begin, end);
    }
    for (auto& th : threads) th.join();
    return rows;
}

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("pearson: length mismatch");
    if (xs.size() < 2) throw std::invalid_argument("pearson: need at least 2 samples");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

double mutual_information(std::span<const std::int64_t> counts, std::span<const int> labels,
                          const BinSpec& binning) {
    if (counts.size() != labels.size()) throw std::invalid_argument("mi: length mismatch");
    if (counts.empty()) throw std::invalid_argument("mi: empty input");

    std::vector<std::int64_t> binned(counts.begin(), counts.end());
    if (binning.clip_percentile) {
        const double q = *binning.clip_percentile;
        if (q <= 0.0 || q > 1.0) throw std::invalid_argument("mi: bad clip percentile");
        std::vector<std::int64_t> sorted(binned);
        std::sort(sorted.begin(), sorted.end());
        // nearest-rank percentile over the pooled sample
        std::size_t rank = static_cast<std::size_t>(
            std::ceil(q * static_cast<double>(sorted.size())));
        rank = std::min(std::max<std::size_t>(rank, 1), sorted.size());
        const std::int64_t cap = sorted[rank - 1];
        for (auto& c : binned) c = std::min(c, cap);
    }

    const double n = static_cast<double>(binned.size());
    std::map<std::int64_t, double> px;
    std::map<int, double> py;
    std::map<std::pair<std::int64_t, int>, double> pxy;
    for (std::size_t i = 0; i < binned.size(); ++i) {
        px[binned[i]] += 1.0;
        py[labels[i]] += 1.0;
        pxy[{binned[i], labels[i]}] += 1.0;
    }
    double mi = 0.0;
    for (const auto& [key, cnt] : pxy) {
        const double pj = cnt / n;
        const double marginal = (px[key.first] / n) * (py[key.second] / n);
        mi += pj * std::log(pj / marginal);
    }
    return std::max(mi, 0.0);
}

L3Report l3_report(const PpiNetwork& net, int n_pos, int n_neg, int k_max, std::uint64_t seed,
                   int workers) {
    if (n_pos < 1 || n_neg < 1) throw std::invalid_argument("l3_report: need n_pos, n_neg >= 1");
    if (static_cast<std::size_t>(n_pos) > net.edge_count())
        throw DataError("l3_report: network has only " + std::to_string(net.edge_count()) +
                        " edges, need " + std::to_string(n_pos) + " positives");

    const std::int64_t n = net.node_count();
    const std::int64_t total_pairs = n * (n - 1) / 2;
    const std::int64_t non_edges = total_pairs - static_cast<std::int64_t>(net.edge_count());
    if (non_edges < n_neg)
        throw DataError("l3_report: network has only " + std::to_string(non_edges) +
                        " non-edges, need " + std::to_string(n_neg) + " negatives");

    Rng rng = make_rng(derive_seed(seed, "l3-report"));

    // positives: uniform edges without replacement
    std::vector<std::size_t> edge_idx(net.edge_count());
    for (std::size_t i = 0; i < edge_idx.size(); ++i) edge_idx[i] = i;
    std::shuffle(edge_idx.begin(), edge_idx.end(), rng);
    std::vector<LabeledPair> pairs;
    pairs.reserve(static_cast<std::size_t>(n_pos + n_neg));
    for (int i = 0; i < n_pos; ++i) {
        const EdgeRec& e = net.edges()[edge_idx[static_cast<std::size_t>(i)]];
        pairs.push_back({e.u, e.v, 1});
    }

    // negatives: rejection-sample distinct non-edges
    std::uniform_int_distribution<int> pick(0, net.node_count() - 1);
    std::set<std::pair<int, int>> chosen;
    while (static_cast<int>(chosen.size()) < n_neg) {
        int a = pick(rng);
        int b = pick(rng);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        if (net.has_edge(a, b)) continue;
        if (!chosen.insert({a, b}).second) continue;
        pairs.push_back({a, b, 0});
    }

    L3Report report;
    report.census_rows = census(net, pairs, k_max, workers);

    std::vector<double> label_col(pairs.size());
    std::vector<int> label_int(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        label_col[i] = static_cast<double>(report.census_rows[i].label);
        label_int[i] = report.census_rows[i].label;
    }
    for (int k = 2; k <= k_max; ++k) {
        std::vector<double> xs(pairs.size());
        std::vector<std::int64_t> raw(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            raw[i] = report.census_rows[i].counts[static_cast<std::size_t>(k - 2)];
            xs[i] = static_cast<double>(raw[i]);
        }
        L3Report::Row row;
        row.k = k;
        row.rho = pearson(xs, label_col);
        row.mi = mutual_information(raw, label_int, BinSpec{0.95});
        report.rows.push_back(row);
    }
    return report;
}

std::string census_csv(const PpiNetwork& net, std::span<const CensusRow> rows, int k_max) {
    std::ostringstream out;
    out << "u,v,label";
    for (int k = 2; k <= k_max; ++k) out << ",L" << k;
    out << '\n';
    for (const CensusRow& row : rows) {
        out << net.node_id(row.u) << ',' << net.node_id(row.v) << ',' << row.label;
        for (std::int64_t c : row.counts) out << ',' << c;
        out << '\n';
    }
    return out.str();
}

std::string summary_csv(const L3Report& report) {
    std::ostringstream out;
    out.precision(17);
    out << "k,pearson,mi\n";
    for (const auto& row : report.rows) {
        out << row.k << ',';
        if (row.rho)
            out << *row.rho;
        else
            out << "NA";
        out << ',' << row.mi << '\n';
    }
    return out.str();
}

}  // namespace l3ppi
