#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "l3ppi/errors.hpp"
#include "l3ppi/graph.hpp"
#include "oracles.hpp"

using namespace l3ppi;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& contents) {
        static int counter = 0;
        path = (std::filesystem::temp_directory_path() /
                ("l3ppi_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++)))
                   .string();
        std::ofstream out(path, std::ios::binary);
        out << contents;
    }
    ~TempFile() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("load_network merges duplicate edges") {
    TempFile f("A\tB\nB\tC\nA\tB\n");
    PpiNetwork net = load_network(f.path, NetworkMode::Binary);
    CHECK(net.node_count() == 3);
    CHECK(net.edge_count() == 2);
}

TEST_CASE("load_network rejects self-loops with a line number") {
    TempFile f("A\tB\nA\tA\n");
    CHECK_THROWS_WITH_AS(load_network(f.path, NetworkMode::Binary), "self-loop at line 2",
                         DataError);
}

TEST_CASE("load_network rejects malformed and empty input") {
    TempFile bad("A\n");
    CHECK_THROWS_AS(load_network(bad.path, NetworkMode::Binary), DataError);
    TempFile empty("");
    CHECK_THROWS_AS(load_network(empty.path, NetworkMode::Binary), DataError);
}

TEST_CASE("multilabel network with a 7-type header") {
    TempFile f(
        "#types reaction,binding,ptmod,activation,inhibition,catalysis,expression\n"
        "A\tB\tbinding\n"
        "A\tB\tactivation,catalysis\n"
        "B\tC\treaction\n");
    PpiNetwork net = load_network(f.path, NetworkMode::Multilabel);
    CHECK(net.type_names().size() == 7);
    CHECK(net.edge_count() == 2);
    // duplicate pair merged with type union
    auto ab = net.edge_types(*net.node_index("A"), *net.node_index("B"));
    REQUIRE(ab.has_value());
    CHECK(*ab == ((1u << 1) | (1u << 3) | (1u << 5)));

    TempFile unknown("#types binding\nA\tB\tphosphorylation\n");
    CHECK_THROWS_AS(load_network(unknown.path, NetworkMode::Multilabel), DataError);
}

TEST_CASE("network round-trip is canonical and byte-stable") {
    TempFile f("B\tC\nA\tB\nC\tA\n");
    PpiNetwork net = load_network(f.path, NetworkMode::Binary);
    const std::string first = serialize_network(net);
    CHECK(first == "A\tB\nA\tC\nB\tC\n");

    TempFile round(first);
    PpiNetwork reloaded = load_network(round.path, NetworkMode::Binary);
    CHECK(serialize_network(reloaded) == first);
}

TEST_CASE("neighbors and degree") {
    using l3ppi::testing::letter_network;
    PpiNetwork path = letter_network(3, {{0, 1}, {1, 2}});
    auto nb = path.neighbors(1);
    REQUIRE(nb.size() == 2);
    CHECK(nb[0] == 0);
    CHECK(nb[1] == 2);

    // isolated node
    PpiNetwork with_isolated = PpiNetwork::from_edges({"A", "B", "C"}, {{0, 1, 1}},
                                                      NetworkMode::Binary);
    CHECK(with_isolated.neighbors(2).empty());
    CHECK(with_isolated.degree(2) == 0);

    PpiNetwork star = letter_network(6, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}});
    CHECK(star.degree(0) == 5);

    CHECK_THROWS_AS(star.neighbors(99), std::out_of_range);
}

TEST_CASE("degree sum equals twice the edge count") {
    PpiNetwork net = l3ppi::testing::random_network(40, 4.0, 7);
    std::int64_t total = 0;
    for (int v = 0; v < net.node_count(); ++v) total += net.degree(v);
    CHECK(total == 2 * static_cast<std::int64_t>(net.edge_count()));
}

TEST_CASE("load_embeddings happy path and errors") {
    TempFile f("2 1\nA 0.5 -1.0\n");
    EmbeddingTable table = load_embeddings(f.path);
    CHECK(table.dim() == 2);
    CHECK(table.size() == 1);
    auto vec = table.vector_for("A");
    CHECK(vec[0] == doctest::Approx(0.5));
    CHECK(vec[1] == doctest::Approx(-1.0));

    TempFile wrong_dim("2 1\nA 0.5 -1.0 3.0\n");
    CHECK_THROWS_AS(load_embeddings(wrong_dim.path), DataError);

    TempFile dup("1 2\nA 0.5\nA 0.25\n");
    CHECK_THROWS_AS(load_embeddings(dup.path), DataError);

    TempFile nonfinite("1 1\nA nan\n");
    CHECK_THROWS_AS(load_embeddings(nonfinite.path), DataError);

    TempFile count_mismatch("1 3\nA 0.5\nB 0.25\n");
    CHECK_THROWS_AS(load_embeddings(count_mismatch.path), DataError);
}

TEST_CASE("embedding save/load round trip at scale") {
    // synthetic-embedding style file: d=64, N=1690
    std::unordered_map<std::string, std::vector<double>> vectors;
    Rng rng = make_rng(42);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int i = 0; i < 1690; ++i) {
        std::vector<double> v(64);
        for (double& x : v) x = dist(rng);
        vectors.emplace("P" + std::to_string(i), std::move(v));
    }
    EmbeddingTable table(64, std::move(vectors));
    TempFile f("");
    save_embeddings(table, f.path);
    EmbeddingTable loaded = load_embeddings(f.path);
    CHECK(loaded.dim() == 64);
    CHECK(loaded.size() == 1690);
    CHECK(loaded.vector_for("P123")[5] == table.vector_for("P123")[5]);
}

TEST_CASE("missing protein in embedding table is a hard error") {
    PpiNetwork net = l3ppi::testing::letter_network(2, {{0, 1}});
    EmbeddingTable table(1, {{"A", {1.0}}});
    CHECK_THROWS_AS(table.aligned_to(net), DataError);
}

TEST_CASE("STRING export conversion") {
    TempFile f(
        "protein1 protein2 mode score\n"
        "P1 P2 binding 500\n"
        "P1 P2 activation 900\n"
        "P2 P3 binding 150\n");
    PpiNetwork net = load_network_string_export(f.path, NetworkMode::Multilabel);
    CHECK(net.node_count() == 3);
    CHECK(net.edge_count() == 2);
    CHECK(net.type_names().size() == 2);
}
