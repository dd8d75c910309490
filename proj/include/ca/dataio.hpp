#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ca/types.hpp"

namespace ca {

namespace fs = std::filesystem;
using json = nlohmann::json;

// FMAT layout (little-endian):
//   "FMAT" | u32 version=1 | u64 n | u64 d | n*d f32 row-major |
//   u64 id_block_len | ids joined by '\n'
inline constexpr std::uint32_t kFmatVersion = 1;

std::vector<std::uint8_t> encode_fmat(const FeatureMatrix& m);
// Decodes without the FeatureMatrix shape invariants (n >= 2); used for
// auxiliary matrices such as PCA eigenvalue vectors.
FeatureMatrix decode_fmat(std::span<const std::uint8_t> bytes);

void write_fmat(const FeatureMatrix& m, const fs::path& path);
FeatureMatrix read_fmat(const fs::path& path);

// Checks n >= 2, d >= 1, finite values, unique non-empty ids.
void validate_feature_matrix(const FeatureMatrix& m);

FeatureMatrix load_feature_matrix(const fs::path& path);
void write_feature_matrix(const FeatureMatrix& m, const fs::path& path);

std::vector<std::uint8_t> read_bytes(const fs::path& path);
void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes);
json read_json_file(const fs::path& path);
// Pretty-printed with a trailing newline; identical values give identical bytes.
void write_json_file(const fs::path& path, const json& doc);

json manifest_to_json(const SampleManifest& m);
SampleManifest manifest_from_json(const json& j);
SampleManifest load_manifest(const fs::path& path);
void write_manifest(const SampleManifest& m, const fs::path& path);
// Throws BadIds unless the manifest ids equal `ids` in the same order.
void check_manifest_matches(const SampleManifest& m, std::span<const SampleId> ids);

std::string provenance_name(LabelProvenance p);
json label_map_to_json(const LabelMap& m);
LabelMap label_map_from_json(const json& j);
LabelMap load_label_map(const fs::path& path);
void write_label_map(const LabelMap& m, const fs::path& path);

struct LabeledDataset {
  std::vector<std::pair<SampleId, std::string>> labeled;
  std::vector<SampleId> rejected;

  bool operator==(const LabeledDataset&) const = default;
};

// Applies `labels` to every retained sample. Throws MissingLabel naming the
// first retained cluster without an entry.
LabeledDataset build_labeled_dataset(const ConsensusResult& consensus, const LabelMap& labels);
json labeled_dataset_to_json(const LabeledDataset& ds);
LabeledDataset labeled_dataset_from_json(const json& j);
LabeledDataset load_labeled_dataset(const fs::path& path);

// Returns the number of labeled (retained) samples written.
std::size_t write_labeled_dataset(const SampleManifest& manifest, const ConsensusResult& consensus,
                                  const LabelMap& labels, const fs::path& path);

}  // namespace ca
