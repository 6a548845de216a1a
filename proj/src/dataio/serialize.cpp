#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "s2r/dataio.hpp"

namespace s2r::dataio {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint32_t crc32_of(const void* data, std::size_t size) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  const auto* p = static_cast<const Bytef*>(data);
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = ::crc32(crc, p, chunk);
    p += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {

void append_le(std::vector<unsigned char>& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

float read_le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

}  // namespace

void save_dataset(const SequenceDataset& dataset, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<unsigned char> blob;
  json records = json::array();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = dataset[i];
    json r = {{"id", s.id},
              {"label", to_string(s.label)},
              {"identity", s.identity_id},
              {"signal", s.signal_id},
              {"ethnicity", to_string(s.ethnicity)},
              {"gender", to_string(s.gender)},
              {"angle", {s.angle.h_rot, s.angle.v_rot}},
              {"provenance", to_string(s.provenance)},
              {"length", s.length()},
              {"offset", blob.size()}};
    if (dataset.has_folds()) r["fold"] = dataset.fold_of()[i];
    records.push_back(std::move(r));
    for (float v : s.values) append_le(blob, v);
  }

  const auto& m = dataset.manifest();
  json manifest = {{"schema_version", m.schema_version},
                   {"seed", m.seed},
                   {"kind", m.kind},
                   {"config", m.config},
                   {"channels", kChannelCount},
                   {"count", dataset.size()},
                   {"has_folds", dataset.has_folds()},
                   {"data_file", kSequencesFile},
                   {"data_bytes", blob.size()},
                   {"crc32", crc32_of(blob.data(), blob.size())},
                   {"records", std::move(records)}};

  {
    std::ofstream bin(dir / kSequencesFile, std::ios::binary | std::ios::trunc);
    bin.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
    if (!bin) throw std::runtime_error("failed writing " + (dir / kSequencesFile).string());
  }
  std::ofstream out(dir / kManifestFile, std::ios::trunc);
  out << manifest.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + (dir / kManifestFile).string());
}

SequenceDataset load_dataset(const fs::path& dir) {
  using K = LoadError::Kind;
  std::ifstream min(dir / kManifestFile);
  if (!min) throw LoadError(K::Io, "cannot open " + (dir / kManifestFile).string());
  json manifest;
  try {
    manifest = json::parse(min);
  } catch (const json::exception& e) {
    throw LoadError(K::CorruptManifest, std::string("manifest is not valid JSON: ") + e.what());
  }

  std::ifstream bin(dir / kSequencesFile, std::ios::binary);
  if (!bin) throw LoadError(K::Io, "cannot open " + (dir / kSequencesFile).string());
  const std::vector<unsigned char> blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());

  try {
    if (manifest.at("schema_version").get<int>() != kDatasetSchemaVersion)
      throw LoadError(K::CorruptManifest, "unsupported dataset schema version");
    if (manifest.at("crc32").get<std::uint32_t>() != crc32_of(blob.data(), blob.size()))
      throw LoadError(K::ChecksumMismatch, "sequence data checksum mismatch in " + dir.string());
    if (manifest.at("channels").get<std::size_t>() != kChannelCount)
      throw LoadError(K::DimensionMismatch, "manifest channel count is not 14");
    if (manifest.at("data_bytes").get<std::size_t>() != blob.size())
      throw LoadError(K::DimensionMismatch, "data size disagrees with manifest");

    const auto& records = manifest.at("records");
    if (records.size() != manifest.at("count").get<std::size_t>())
      throw LoadError(K::DimensionMismatch, "record count disagrees with manifest count");
    const bool has_folds = manifest.at("has_folds").get<bool>();

    std::vector<LabeledSequence> seqs;
    std::vector<int> folds;
    seqs.reserve(records.size());
    std::size_t expected_offset = 0;
    for (const auto& r : records) {
      LabeledSequence s;
      s.id = r.at("id").get<std::string>();
      s.label = parse_label(r.at("label").get<std::string>());
      s.identity_id = r.at("identity").get<std::string>();
      s.signal_id = r.at("signal").get<std::string>();
      s.ethnicity = parse_ethnicity(r.at("ethnicity").get<std::string>());
      s.gender = parse_gender(r.at("gender").get<std::string>());
      s.angle = {r.at("angle").at(0).get<double>(), r.at("angle").at(1).get<double>()};
      s.provenance = parse_provenance(r.at("provenance").get<std::string>());
      const auto length = r.at("length").get<std::size_t>();
      const auto offset = r.at("offset").get<std::size_t>();
      const std::size_t bytes = length * kChannelCount * 4;
      if (length == 0 || offset != expected_offset || offset + bytes > blob.size())
        throw LoadError(K::DimensionMismatch, "record '" + s.id + "' has inconsistent length/offset");
      s.values.resize(length * kChannelCount);
      for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] = read_le(blob.data() + offset + 4 * i);
      expected_offset += bytes;
      if (has_folds) folds.push_back(r.at("fold").get<int>());
      seqs.push_back(std::move(s));
    }
    if (expected_offset != blob.size())
      throw LoadError(K::DimensionMismatch, "trailing bytes after the last record");

    Manifest m;
    m.schema_version = manifest.at("schema_version").get<int>();
    m.seed = manifest.at("seed").get<std::uint64_t>();
    m.kind = manifest.at("kind").get<std::string>();
    m.config = manifest.at("config");
    if (has_folds) return SequenceDataset(std::move(seqs), std::move(m), std::move(folds));
    return SequenceDataset(std::move(seqs), std::move(m));
  } catch (const json::exception& e) {
    throw LoadError(K::CorruptManifest, std::string("malformed manifest: ") + e.what());
  } catch (const ValidationError& e) {
    throw LoadError(K::CorruptManifest, std::string("invalid manifest content: ") + e.what());
  }
}

}  // namespace s2r::dataio
