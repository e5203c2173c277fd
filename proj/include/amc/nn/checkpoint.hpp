#pragma once

// Trained-model serialization: layer specs plus parameter and buffer
// tensors, little-endian float32, checksummed. Magic "MODM".

#include <filesystem>
#include <memory>

#include "amc/nn/network.hpp"
#include "amc/serialize.hpp"

namespace amc::nn {

void write_network_spec(ByteWriter& w, const NetworkSpec& spec);
NetworkSpec read_network_spec(ByteReader& r);

// Parameters followed by buffers, each as u32 element count + f32 values.
void write_network_params(ByteWriter& w, Network<float>& net);
void read_network_params(ByteReader& r, Network<float>& net);

void save_checkpoint(Network<float>& net, uint64_t init_seed, const std::filesystem::path& path);

struct LoadedCheckpoint {
    NetworkSpec spec;
    uint64_t init_seed = 0;
    std::unique_ptr<Network<float>> net;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace amc::nn
