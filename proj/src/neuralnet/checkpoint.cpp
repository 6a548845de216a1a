#include "s2r/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "s2r/dataio.hpp"

namespace s2r::nn {

namespace fs = std::filesystem;
using dataio::LoadError;

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

void save_checkpoint(InceptionTimeModel& model, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<float> blob;
  nlohmann::json layout = nlohmann::json::array();
  for (const auto& p : model.parameters()) {
    layout.push_back({{"name", p.name}, {"size", p.value->size()}});
    for (double v : *p.value) blob.push_back(static_cast<float>(v));
  }
  const auto bytes = blob.size() * sizeof(float);
  nlohmann::json j = {{"config", model.config().to_json()},
                      {"seed", model.seed()},
                      {"epoch", model.epochs_trained},
                      {"frozen_blocks", model.frozen_blocks()},
                      {"history", model.history},
                      {"layout", layout},
                      {"weights_file", kWeightsFile},
                      {"weights_bytes", bytes},
                      {"crc32", dataio::crc32_of(blob.data(), bytes)}};

  std::ofstream w(dir / kWeightsFile, std::ios::binary | std::ios::trunc);
  w.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(bytes));
  if (!w) throw LoadError(LoadError::Kind::Io, "cannot write " + (dir / kWeightsFile).string());
  std::ofstream m(dir / kModelFile, std::ios::trunc);
  m << j.dump(2) << '\n';
  if (!m) throw LoadError(LoadError::Kind::Io, "cannot write " + (dir / kModelFile).string());
}

InceptionTimeModel load_checkpoint(const fs::path& dir) {
  std::ifstream m(dir / kModelFile);
  if (!m) throw LoadError(LoadError::Kind::Io, "cannot open " + (dir / kModelFile).string());
  nlohmann::json j;
  ModelConfig cfg;
  std::uint64_t seed = 0;
  try {
    j = nlohmann::json::parse(m);
    cfg = ModelConfig::from_json(j.at("config"));
    seed = j.at("seed").get<std::uint64_t>();
  } catch (const std::exception& e) {
    throw LoadError(LoadError::Kind::CorruptManifest, std::string("bad model.json: ") + e.what());
  }

  std::ifstream w(dir / kWeightsFile, std::ios::binary);
  if (!w) throw LoadError(LoadError::Kind::Io, "cannot open " + (dir / kWeightsFile).string());
  std::vector<char> raw((std::istreambuf_iterator<char>(w)), std::istreambuf_iterator<char>());
  try {
    if (j.at("crc32").get<std::uint32_t>() != dataio::crc32_of(raw.data(), raw.size()))
      throw LoadError(LoadError::Kind::ChecksumMismatch, "weights.bin checksum mismatch");
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(LoadError::Kind::CorruptManifest, std::string("bad model.json: ") + e.what());
  }

  InceptionTimeModel model(cfg, seed);
  auto params = model.parameters();
  const auto& layout = j.at("layout");
  if (layout.size() != params.size())
    throw LoadError(LoadError::Kind::DimensionMismatch, "checkpoint layout does not match the architecture");
  std::size_t offset = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto n = layout[i].at("size").get<std::size_t>();
    if (layout[i].at("name").get<std::string>() != params[i].name || n != params[i].value->size())
      throw LoadError(LoadError::Kind::DimensionMismatch, "tensor " + params[i].name + " does not match layout");
    if ((offset + n) * sizeof(float) > raw.size())
      throw LoadError(LoadError::Kind::DimensionMismatch, "weights.bin is truncated");
    for (std::size_t k = 0; k < n; ++k) {
      float f;
      std::memcpy(&f, raw.data() + (offset + k) * sizeof(float), sizeof(float));
      (*params[i].value)[k] = f;
    }
    offset += n;
  }
  if (offset * sizeof(float) != raw.size())
    throw LoadError(LoadError::Kind::DimensionMismatch, "weights.bin has trailing data");

  model.set_freeze(j.value("frozen_blocks", std::size_t{0}));
  model.epochs_trained = j.value("epoch", 0);
  model.history = j.value("history", std::vector<double>{});
  return model;
}

}  // namespace s2r::nn
