#include "l3ppi/pipeline.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

#include "l3ppi/errors.hpp"

namespace l3ppi {

PpiNetwork train_network(const PpiNetwork& net, const SplitSpec& split) {
    std::vector<EdgeRec> edges;
    edges.reserve(split.train.size());
    for (const SplitPair& p : split.train) {
        if (p.label == 0) continue;  // binary negatives are not edges
        edges.push_back({p.u, p.v, net.mode() == NetworkMode::Multilabel ? p.label : TypeBitset{1}});
    }
    return PpiNetwork::from_edges(net.node_ids(), edges, net.mode(), net.type_names());
}

std::vector<std::pair<int, int>> heldout_pairs(const SplitSpec& split) {
    std::vector<std::pair<int, int>> out;
    out.reserve(split.val.size() + split.test.size());
    for (const SplitPair& p : split.val) out.emplace_back(p.u, p.v);
    for (const SplitPair& p : split.test) out.emplace_back(p.u, p.v);
    return out;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file for digest: " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 14];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
    }
    std::ostringstream hex;
    hex << std::hex;
    hex.width(16);
    hex.fill('0');
    hex << h;
    return hex.str();
}

}  // namespace l3ppi
