#pragma once

#include <filesystem>

#include "s2r/nn/inception.hpp"

namespace s2r::nn {

inline constexpr const char* kModelFile = "model.json";
inline constexpr const char* kWeightsFile = "weights.bin";

// model.json holds the architecture, seed, epoch count, freeze depth, history
// and the tensor layout; weights.bin is every tensor of parameters() (running
// statistics included) as little-endian float32, concatenated in that order.
void save_checkpoint(InceptionTimeModel& model, const std::filesystem::path& dir);

// Throws dataio::LoadError on IO failure, corrupt JSON, layout mismatch or CRC
// mismatch.
InceptionTimeModel load_checkpoint(const std::filesystem::path& dir);

}  // namespace s2r::nn
