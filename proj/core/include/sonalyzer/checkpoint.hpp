#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "sonalyzer/dsp.hpp"
#include "sonalyzer/network.hpp"

namespace sonalyzer {

/// Self-describing little-endian checkpoint container:
///   magic "SNLZCKP1", u32 format version, u64 JSON header length,
///   JSON header (configs, seed, metrics, tensor directory), raw f32 data.
struct CheckpointMeta {
    std::uint32_t format_version = 1;
    std::uint64_t seed = 0;
    int epoch = 0;
    double best_val_hr3f = 0.0;
    DspConfig dsp;
    // Optional extra named tensors (optimizer state for resumable training).
    std::map<std::string, std::vector<float>> extra;
};

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void save_checkpoint(const std::string& path, const Network<float>& net,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
    ModelConfig model;
    CheckpointMeta meta;
    std::vector<float> flat_params;  // layout matches Network<float>(model)
};

/// Throws CheckpointError on bad magic, version, or tensor layout mismatch.
LoadedCheckpoint load_checkpoint(const std::string& path);

/// Convenience: rebuild a network from a loaded checkpoint.
Network<float> restore_network(const LoadedCheckpoint& ckpt);

}  // namespace sonalyzer
