#include "tsagent/checkpoint.hpp"

#include "tsagent/errors.hpp"

#include <cstring>
#include <fstream>

namespace tsa {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'A', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void put(std::ofstream& os, T v) {
    // Little-endian hosts only; asserted at build configuration level.
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw ParseError("checkpoint: truncated file");
    return v;
}

void put_string(std::ofstream& os, const std::string& s) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::ifstream& is) {
    auto n = get<std::uint32_t>(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw ParseError("checkpoint: truncated string");
    return s;
}

} // namespace

void save_checkpoint(const std::string& path, const ParamStore& params, std::uint64_t seed) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ContractError("checkpoint: cannot open '" + path + "' for writing");
    os.write(kMagic, sizeof(kMagic));
    put_string(os, kEngineVersion);
    put<std::uint64_t>(os, seed);
    put<std::uint64_t>(os, params.all().size());
    for (const auto& p : params.all()) {
        put_string(os, p.name());
        put<std::uint32_t>(os, static_cast<std::uint32_t>(p.shape().size()));
        for (int d : p.shape()) put<std::uint64_t>(os, static_cast<std::uint64_t>(d));
        os.write(reinterpret_cast<const char*>(p.data().data()),
                 static_cast<std::streamsize>(sizeof(double) * p.data().size()));
    }
    if (!os) throw ContractError("checkpoint: write failed for '" + path + "'");
}

CheckpointInfo load_checkpoint(const std::string& path, ParamStore& params) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ContractError("checkpoint: cannot open '" + path + "'");
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ParseError("checkpoint: bad magic in '" + path + "'");
    CheckpointInfo info;
    info.engine_version = get_string(is);
    info.seed = get<std::uint64_t>(is);
    info.tensor_count = static_cast<std::size_t>(get<std::uint64_t>(is));
    for (std::size_t i = 0; i < info.tensor_count; ++i) {
        std::string name = get_string(is);
        auto ndim = get<std::uint32_t>(is);
        Shape shape(ndim);
        for (auto& d : shape) d = static_cast<int>(get<std::uint64_t>(is));
        std::vector<double> data(static_cast<std::size_t>(shape_size(shape)));
        is.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(sizeof(double) * data.size()));
        if (!is) throw ParseError("checkpoint: truncated payload for '" + name + "'");
        if (!params.has(name)) throw ContractError("checkpoint: unknown parameter '" + name + "'");
        Tensor p = params.get(name);
        if (p.shape() != shape)
            throw ShapeError("checkpoint: shape mismatch for '" + name + "': file " + shape_str(shape) +
                             " vs model " + shape_str(p.shape()));
        p.data_mut() = std::move(data);
    }
    return info;
}

} // namespace tsa
