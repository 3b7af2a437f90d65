#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "config.hpp"
#include "json.hpp"
#include "l3ppi/errors.hpp"
#include "l3ppi/graph.hpp"
#include "l3ppi/pipeline.hpp"
#include "l3ppi/rng.hpp"
#include "l3ppi/split.hpp"

namespace l3ppi::cli {

constexpr const char* kToolVersion = "l3ppi 1.0.0";
constexpr const char* kOutputRootEnv = "L3PPI_OUT_ROOT";

// Relative output paths nest under $L3PPI_OUT_ROOT when it is set.
inline std::filesystem::path resolve_out_dir(const std::string& out) {
    std::filesystem::path p(out);
    if (p.is_relative()) {
        if (const char* root = std::getenv(kOutputRootEnv)) p = std::filesystem::path(root) / p;
    }
    std::filesystem::create_directories(p);
    return p;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

class ManifestBuilder {
  public:
    ManifestBuilder(const std::string& subcommand, const RunConfig& cfg, std::uint64_t seed) {
        manifest_["tool"] = kToolVersion;
        manifest_["subcommand"] = subcommand;
        manifest_["config"] = cfg.to_json();
        const SeedStreams streams{seed};
        manifest_["seeds"] = {{"master", streams.master},
                              {"data", streams.data()},
                              {"init", streams.init()},
                              {"gumbel", streams.gumbel()},
                              {"dropout", streams.dropout()}};
        manifest_["inputs"] = nlohmann::json::object();
    }

    void add_input(const std::string& label, const std::string& path) {
        manifest_["inputs"][label] = {{"path", path}, {"digest", file_digest(path)}};
    }

    void write(const std::filesystem::path& out_dir) const {
        write_text(out_dir / "manifest.json", manifest_.dump(2) + "\n");
    }

  private:
    nlohmann::json manifest_;
};

inline NetworkMode mode_from_string(const std::string& s) {
    if (s == "binary") return NetworkMode::Binary;
    if (s == "multilabel") return NetworkMode::Multilabel;
    throw ConfigError("unknown network mode '" + s + "' (want binary|multilabel)");
}

inline PpiNetwork load_net(const RunConfig& cfg) {
    const std::string path = cfg.str("net");
    if (path.empty()) throw ConfigError("missing required key 'net'");
    if (!std::filesystem::exists(path)) throw DataError("network file not found: " + path);
    const NetworkMode mode = mode_from_string(cfg.str("mode"));
    const std::string format = cfg.str("net_format");
    if (format == "edgelist") return load_network(path, mode);
    if (format == "string") return load_network_string_export(path, mode);
    throw ConfigError("unknown net_format '" + format + "' (want edgelist|string)");
}

inline EmbeddingTable load_emb(const RunConfig& cfg) {
    const std::string path = cfg.str("emb");
    if (path.empty()) throw ConfigError("missing required key 'emb'");
    if (!std::filesystem::exists(path)) throw DataError("embedding file not found: " + path);
    return load_embeddings(path);
}

inline SplitSpec load_split_base(const RunConfig& cfg, const PpiNetwork& net) {
    const std::string base = cfg.str("split");
    if (base.empty()) throw ConfigError("missing required key 'split'");
    if (!std::filesystem::exists(base + ".tsv"))
        throw DataError("split file not found: " + base + ".tsv");
    return read_split(net, base);
}

}  // namespace l3ppi::cli
