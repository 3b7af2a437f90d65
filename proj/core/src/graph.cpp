#include "l3ppi/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "l3ppi/errors.hpp"

namespace l3ppi {

namespace {

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

PpiNetwork PpiNetwork::from_edges(std::vector<std::string> node_ids,
                                  const std::vector<EdgeRec>& edges,
                                  NetworkMode mode,
                                  std::vector<std::string> type_names) {
    PpiNetwork net;
    net.mode_ = mode;
    net.node_ids_ = std::move(node_ids);
    net.type_names_ = std::move(type_names);
    net.index_of_.reserve(net.node_ids_.size());
    for (int i = 0; i < static_cast<int>(net.node_ids_.size()); ++i) {
        auto [it, inserted] = net.index_of_.emplace(net.node_ids_[i], i);
        if (!inserted) throw DataError("duplicate node id: " + net.node_ids_[i]);
    }

    const int n = net.node_count();
    std::map<std::pair<int, int>, TypeBitset> merged;
    for (const EdgeRec& e : edges) {
        if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n)
            throw DataError("edge index out of range");
        if (e.u == e.v) throw DataError("self-loop on node " + net.node_ids_[e.u]);
        auto key = std::minmax(e.u, e.v);
        merged[{key.first, key.second}] |= e.types;
    }

    net.edges_.reserve(merged.size());
    net.adj_.assign(n, {});
    net.adj_types_.assign(n, {});
    for (const auto& [key, types] : merged) {
        if (mode == NetworkMode::Multilabel && types == 0)
            throw DataError("multilabel edge with empty type set: " +
                            net.node_ids_[key.first] + " -- " + net.node_ids_[key.second]);
        net.edges_.push_back({key.first, key.second, types});
        net.adj_[key.first].push_back(key.second);
        net.adj_types_[key.first].push_back(types);
        net.adj_[key.second].push_back(key.first);
        net.adj_types_[key.second].push_back(types);
    }
    for (int v = 0; v < n; ++v) {
        // keep adj_types_ aligned while sorting neighbors
        std::vector<int> order(net.adj_[v].size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return net.adj_[v][a] < net.adj_[v][b]; });
        std::vector<int> nbrs(order.size());
        std::vector<TypeBitset> tys(order.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            nbrs[i] = net.adj_[v][order[i]];
            tys[i] = net.adj_types_[v][order[i]];
        }
        net.adj_[v] = std::move(nbrs);
        net.adj_types_[v] = std::move(tys);
    }
    return net;
}

void PpiNetwork::check_index(int v) const {
    if (v < 0 || v >= node_count())
        throw std::out_of_range("node index " + std::to_string(v) + " out of range (N=" +
                                std::to_string(node_count()) + ")");
}

std::span<const int> PpiNetwork::neighbors(int v) const {
    check_index(v);
    return adj_[v];
}

bool PpiNetwork::has_edge(int u, int v) const {
    check_index(u);
    check_index(v);
    const auto& nb = adj_[u];
    return std::binary_search(nb.begin(), nb.end(), v);
}

std::optional<TypeBitset> PpiNetwork::edge_types(int u, int v) const {
    check_index(u);
    check_index(v);
    const auto& nb = adj_[u];
    auto it = std::lower_bound(nb.begin(), nb.end(), v);
    if (it == nb.end() || *it != v) return std::nullopt;
    return adj_types_[u][static_cast<std::size_t>(it - nb.begin())];
}

const std::string& PpiNetwork::node_id(int v) const {
    check_index(v);
    return node_ids_[v];
}

std::optional<int> PpiNetwork::node_index(const std::string& id) const {
    auto it = index_of_.find(id);
    if (it == index_of_.end()) return std::nullopt;
    return it->second;
}

namespace {

struct EdgeListParse {
    std::vector<std::string> node_ids;
    std::unordered_map<std::string, int> index_of;
    std::vector<EdgeRec> edges;
    std::vector<std::string> type_names;
};

int intern_node(EdgeListParse& p, const std::string& id) {
    auto it = p.index_of.find(id);
    if (it != p.index_of.end()) return it->second;
    int idx = static_cast<int>(p.node_ids.size());
    p.node_ids.push_back(id);
    p.index_of.emplace(id, idx);
    return idx;
}

TypeBitset parse_type_list(const EdgeListParse& p, const std::string& field, std::size_t line_no) {
    TypeBitset bits = 0;
    for (const std::string& tok : split_on(field, ',')) {
        if (tok.empty())
            throw DataError("empty type token at line " + std::to_string(line_no));
        auto it = std::find(p.type_names.begin(), p.type_names.end(), tok);
        if (it == p.type_names.end())
            throw DataError("unknown type token '" + tok + "' at line " + std::to_string(line_no));
        bits |= TypeBitset{1} << (it - p.type_names.begin());
    }
    return bits;
}

}  // namespace

PpiNetwork load_network(const std::string& path, NetworkMode mode) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open network file: " + path);

    EdgeListParse p;
    std::string line;
    std::size_t line_no = 0;
    bool saw_data = false;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        if (line.rfind("#types", 0) == 0) {
            if (saw_data)
                throw DataError("#types header after data at line " + std::to_string(line_no));
            std::string rest = line.substr(6);
            if (!rest.empty() && (rest[0] == ' ' || rest[0] == '\t')) rest = rest.substr(1);
            p.type_names.clear();
            for (const std::string& tok : split_on(rest, ',')) {
                if (tok.empty())
                    throw DataError("empty type name in #types header at line " +
                                    std::to_string(line_no));
                p.type_names.push_back(tok);
            }
            if (p.type_names.size() > 32)
                throw DataError("label space too large (max 32 types)");
            continue;
        }

        std::vector<std::string> cols = split_on(line, '\t');
        const std::size_t want = (mode == NetworkMode::Multilabel) ? 3 : 2;
        if (cols.size() != want || cols[0].empty() || cols[1].empty())
            throw DataError("malformed line " + std::to_string(line_no) + ": '" + line + "'");
        if (cols[0] == cols[1])
            throw DataError("self-loop at line " + std::to_string(line_no));

        saw_data = true;
        TypeBitset bits = 0;
        if (mode == NetworkMode::Multilabel) {
            if (p.type_names.empty())
                throw DataError("multilabel file lacks #types header (required before data)");
            bits = parse_type_list(p, cols[2], line_no);
        }
        int a = intern_node(p, cols[0]);
        int b = intern_node(p, cols[1]);
        p.edges.push_back({a, b, bits});
    }
    if (!saw_data) throw DataError("empty network file: " + path);

    return PpiNetwork::from_edges(std::move(p.node_ids), p.edges, mode, std::move(p.type_names));
}

PpiNetwork load_network_string_export(const std::string& path, NetworkMode mode) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open network file: " + path);

    EdgeListParse p;
    std::string line;
    std::size_t line_no = 0;
    bool saw_data = false;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string a, b, type_tok, score;
        if (!(ss >> a >> b >> type_tok >> score)) {
            throw DataError("malformed STRING export line " + std::to_string(line_no));
        }
        if (line_no == 1 && a == "protein1") continue;  // header row
        if (a == b) throw DataError("self-loop at line " + std::to_string(line_no));
        saw_data = true;
        TypeBitset bits = 0;
        if (mode == NetworkMode::Multilabel) {
            auto it = std::find(p.type_names.begin(), p.type_names.end(), type_tok);
            std::size_t pos;
            if (it == p.type_names.end()) {
                if (p.type_names.size() >= 32) throw DataError("label space too large (max 32 types)");
                pos = p.type_names.size();
                p.type_names.push_back(type_tok);
            } else {
                pos = static_cast<std::size_t>(it - p.type_names.begin());
            }
            bits = TypeBitset{1} << pos;
        }
        int u = intern_node(p, a);
        int v = intern_node(p, b);
        p.edges.push_back({u, v, bits});
    }
    if (!saw_data) throw DataError("empty network file: " + path);
    return PpiNetwork::from_edges(std::move(p.node_ids), p.edges, mode, std::move(p.type_names));
}

std::string serialize_network(const PpiNetwork& net) {
    struct Row {
        std::string a, b;
        TypeBitset types;
    };
    std::vector<Row> rows;
    rows.reserve(net.edge_count());
    for (const EdgeRec& e : net.edges()) {
        std::string a = net.node_id(e.u);
        std::string b = net.node_id(e.v);
        if (b < a) std::swap(a, b);
        rows.push_back({std::move(a), std::move(b), e.types});
    }
    std::sort(rows.begin(), rows.end(),
              [](const Row& x, const Row& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });

    std::ostringstream out;
    if (net.mode() == NetworkMode::Multilabel) {
        out << "#types ";
        const auto& names = net.type_names();
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (i) out << ',';
            out << names[i];
        }
        out << '\n';
    }
    for (const Row& r : rows) {
        out << r.a << '\t' << r.b;
        if (net.mode() == NetworkMode::Multilabel) {
            out << '\t';
            bool first = true;
            for (std::size_t t = 0; t < net.type_names().size(); ++t) {
                if (r.types & (TypeBitset{1} << t)) {
                    if (!first) out << ',';
                    out << net.type_names()[t];
                    first = false;
                }
            }
        }
        out << '\n';
    }
    return out.str();
}

void save_network(const PpiNetwork& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write network file: " + path);
    out << serialize_network(net);
}

EmbeddingTable::EmbeddingTable(int dim,
                               std::unordered_map<std::string, std::vector<double>> vectors)
    : dim_(dim), vectors_(std::move(vectors)) {
    for (const auto& [id, vec] : vectors_) {
        if (static_cast<int>(vec.size()) != dim_)
            throw DataError("embedding dimension mismatch for protein " + id);
        for (double x : vec)
            if (!std::isfinite(x)) throw DataError("non-finite embedding value for protein " + id);
    }
}

std::span<const double> EmbeddingTable::vector_for(const std::string& id) const {
    auto it = vectors_.find(id);
    if (it == vectors_.end()) throw DataError("protein missing from embedding table: " + id);
    return it->second;
}

std::vector<std::vector<double>> EmbeddingTable::aligned_to(const PpiNetwork& net) const {
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(net.node_count()));
    for (int v = 0; v < net.node_count(); ++v) {
        std::span<const double> e = vector_for(net.node_id(v));
        rows.emplace_back(e.begin(), e.end());
    }
    return rows;
}

EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty embedding file: " + path);
    line = strip_cr(line);
    std::istringstream header(line);
    long long dim = 0, count = 0;
    if (!(header >> dim >> count) || dim <= 0 || count < 0)
        throw DataError("malformed embedding header (want 'd N'): '" + line + "'");

    std::unordered_map<std::string, std::vector<double>> vectors;
    vectors.reserve(static_cast<std::size_t>(count));
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string id;
        ss >> id;
        std::vector<double> vec;
        vec.reserve(static_cast<std::size_t>(dim));
        double x;
        while (ss >> x) vec.push_back(x);
        if (!ss.eof())
            throw DataError("malformed embedding value at line " + std::to_string(line_no));
        if (static_cast<long long>(vec.size()) != dim)
            throw DataError("embedding dimension mismatch at line " + std::to_string(line_no) +
                            " (got " + std::to_string(vec.size()) + ", want " +
                            std::to_string(dim) + ")");
        for (double v : vec)
            if (!std::isfinite(v))
                throw DataError("non-finite embedding value at line " + std::to_string(line_no));
        if (!vectors.emplace(id, std::move(vec)).second)
            throw DataError("duplicate protein id at line " + std::to_string(line_no) + ": " + id);
    }
    if (static_cast<long long>(vectors.size()) != count)
        throw DataError("embedding count mismatch: header says " + std::to_string(count) +
                        ", file has " + std::to_string(vectors.size()));
    return EmbeddingTable(static_cast<int>(dim), std::move(vectors));
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write embedding file: " + path);
    std::vector<const std::string*> ids;
    ids.reserve(table.size());
    for (const auto& [id, _] : table.vectors()) ids.push_back(&id);
    std::sort(ids.begin(), ids.end(),
              [](const std::string* a, const std::string* b) { return *a < *b; });

    out << table.dim() << ' ' << table.size() << '\n';
    out.precision(17);
    for (const std::string* id : ids) {
        out << *id;
        for (double x : table.vector_for(*id)) out << ' ' << x;
        out << '\n';
    }
}

}  // namespace l3ppi
