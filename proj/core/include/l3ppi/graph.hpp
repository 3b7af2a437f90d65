#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace l3ppi {

enum class NetworkMode { Binary, Multilabel };

// Bitset over the declared interaction-type label space (STRING-style data
// uses 7 types; anything up to 32 fits).
using TypeBitset = std::uint32_t;

struct EdgeRec {
    int u = 0;  // u < v always
    int v = 0;
    TypeBitset types = 0;
};

// Undirected protein interaction network with dense node indices.
// Immutable after construction; safe for concurrent reads.
class PpiNetwork {
  public:
    PpiNetwork() = default;

    // `edges` may be in any order and may repeat pairs; duplicates merge their
    // type bitsets. Self-loops and out-of-range indices are rejected.
    static PpiNetwork from_edges(std::vector<std::string> node_ids,
                                 const std::vector<EdgeRec>& edges,
                                 NetworkMode mode,
                                 std::vector<std::string> type_names = {});

    int node_count() const { return static_cast<int>(node_ids_.size()); }
    std::size_t edge_count() const { return edges_.size(); }
    NetworkMode mode() const { return mode_; }

    // Sorted neighbor indices; throws std::out_of_range for bad v.
    std::span<const int> neighbors(int v) const;
    int degree(int v) const { return static_cast<int>(neighbors(v).size()); }

    bool has_edge(int u, int v) const;
    // Type bitset of an existing edge; nullopt when (u,v) is not an edge.
    std::optional<TypeBitset> edge_types(int u, int v) const;

    // Canonical edge list: u < v, sorted by (u, v).
    const std::vector<EdgeRec>& edges() const { return edges_; }

    const std::string& node_id(int v) const;
    std::optional<int> node_index(const std::string& id) const;
    const std::vector<std::string>& node_ids() const { return node_ids_; }
    const std::vector<std::string>& type_names() const { return type_names_; }

  private:
    void check_index(int v) const;

    NetworkMode mode_ = NetworkMode::Binary;
    std::vector<std::string> node_ids_;
    std::unordered_map<std::string, int> index_of_;
    std::vector<std::string> type_names_;
    std::vector<EdgeRec> edges_;            // canonical order
    std::vector<std::vector<int>> adj_;     // sorted neighbor lists
    std::vector<std::vector<TypeBitset>> adj_types_;  // aligned with adj_
};

// Edge-list TSV:   idA<TAB>idB[<TAB>type1,type2,...]
// Multilabel files must declare the label space first: "#types t1,t2,...,tn".
// Duplicate undirected pairs merge type bitsets; self-loops are an error.
PpiNetwork load_network(const std::string& path, NetworkMode mode);

// Converts the public STRING export layout "protein1 protein2 mode score"
// (whitespace separated, optional header line) into a PpiNetwork, taking the
// mode column as the interaction type.
PpiNetwork load_network_string_export(const std::string& path, NetworkMode mode);

// Canonical serialization: "#types" header when multilabel, then edges sorted
// by (idA, idB) with idA < idB lexicographically. Byte-identical across runs.
std::string serialize_network(const PpiNetwork& net);
void save_network(const PpiNetwork& net, const std::string& path);

// Frozen per-protein embedding vectors produced by an upstream predictor.
class EmbeddingTable {
  public:
    EmbeddingTable() = default;
    EmbeddingTable(int dim, std::unordered_map<std::string, std::vector<double>> vectors);

    int dim() const { return dim_; }
    std::size_t size() const { return vectors_.size(); }
    bool contains(const std::string& id) const { return vectors_.count(id) != 0; }

    // Hard error on unknown proteins: silently zero-filled vectors would
    // corrupt training.
    std::span<const double> vector_for(const std::string& id) const;

    // Dense matrix row-aligned with the network's node indices.
    std::vector<std::vector<double>> aligned_to(const PpiNetwork& net) const;

    const std::unordered_map<std::string, std::vector<double>>& vectors() const {
        return vectors_;
    }

  private:
    int dim_ = 0;
    std::unordered_map<std::string, std::vector<double>> vectors_;
};

// Text format: first line "d N", then N lines "protein_id v1 ... vd".
EmbeddingTable load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingTable& table, const std::string& path);

}  // namespace l3ppi
