#ifndef TSAGENT_CHECKPOINT_HPP
#define TSAGENT_CHECKPOINT_HPP

#include "tsagent/tensor.hpp"

#include <cstdint>
#include <string>

namespace tsa {

inline constexpr const char* kEngineVersion = "0.1.0";

// Flat binary archive: header (magic, engine version, RNG seed) followed by
// one record per parameter {name, shape, little-endian f64 payload}.
void save_checkpoint(const std::string& path, const ParamStore& params, std::uint64_t seed);

struct CheckpointInfo {
    std::string engine_version;
    std::uint64_t seed = 0;
    std::size_t tensor_count = 0;
};

// Loads values into matching names; shape mismatch or unknown name is an error.
CheckpointInfo load_checkpoint(const std::string& path, ParamStore& params);

} // namespace tsa

#endif // TSAGENT_CHECKPOINT_HPP
