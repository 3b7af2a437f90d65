#include "l3ppi/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "l3ppi/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace l3ppi {

namespace {

constexpr char kMagic[8] = {'L', '3', 'P', 'P', 'I', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("truncated checkpoint: " + path);
    return v;
}

}  // namespace

const Tensor& Checkpoint::tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return t;
    throw DataError("checkpoint has no tensor named '" + name + "'");
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint64_t>(ckpt.manifest_json.size()));
    out.write(ckpt.manifest_json.data(), static_cast<std::streamsize>(ckpt.manifest_json.size()));
    write_pod(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        write_pod(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        const auto& shape = t.shape();
        write_pod(out, static_cast<std::uint32_t>(shape.size()));
        for (int d : shape) write_pod(out, static_cast<std::int64_t>(d));
        const auto data = t.data();
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size() * sizeof(double)));
    }
    if (!out) throw DataError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("not a checkpoint file: " + path);
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(version));

    Checkpoint ckpt;
    const auto manifest_len = read_pod<std::uint64_t>(in, path);
    ckpt.manifest_json.resize(manifest_len);
    in.read(ckpt.manifest_json.data(), static_cast<std::streamsize>(manifest_len));
    if (!in) throw DataError("truncated checkpoint: " + path);

    const auto count = read_pod<std::uint32_t>(in, path);
    ckpt.tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<std::uint32_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto ndim = read_pod<std::uint32_t>(in, path);
        std::vector<int> shape(ndim);
        std::size_t total = 1;
        for (auto& d : shape) {
            const auto dim = read_pod<std::int64_t>(in, path);
            if (dim <= 0) throw DataError("bad tensor dimension in checkpoint");
            d = static_cast<int>(dim);
            total *= static_cast<std::size_t>(dim);
        }
        std::vector<double> data(total);
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(total * sizeof(double)));
        if (!in) throw DataError("truncated checkpoint: " + path);
        ckpt.tensors.emplace_back(std::move(name),
                                  Tensor::from_data(std::move(shape), std::move(data)));
    }
    return ckpt;
}

}  // namespace l3ppi
