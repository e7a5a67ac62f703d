#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "mvmae/model/params.hpp"

namespace mvmae::train {

inline constexpr char kCheckpointMagic[8] = {'M', 'V', 'M', 'A', 'E', 'C', 'K', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    model::ParameterStore params;
    // Optimizer moments aligned with params; empty when not saved.
    model::Gradients first_moment;
    model::Gradients second_moment;
    std::uint64_t optimizer_steps = 0;
    std::uint64_t step = 0;
    std::uint64_t config_hash = 0;
    std::string rng_state;
    std::map<std::string, std::string> meta;
};

// Layout: magic, u32 version, u64 step, u64 optimizer steps, u64 config hash,
// meta table (u32 count, then length-prefixed key/value strings, rng state
// stored under "rng"), tensor table (u32 count, then per tensor: name, u8
// dtype = 1 for f64, u8 flags (bit 0 decay, bit 1 first moment, bit 2
// second moment), u32 ndim, u64 dims, raw little-endian payload).
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mvmae::train
