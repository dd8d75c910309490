#include "ca/dataio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "ca/error.hpp"

namespace ca {

namespace {

constexpr char kMagic[4] = {'F', 'M', 'A', 'T'};
constexpr std::size_t kHeaderSize = 4 + 4 + 8 + 8;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }

  void need(std::size_t count, const char* what) const {
    if (bytes_.size() - pos_ < count) {
      fail(Errc::TruncatedFile, "FMAT truncated at byte offset " + std::to_string(pos_) +
                                    " while reading " + what);
    }
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t count, const char* what) {
    need(count, what);
    auto s = bytes_.subspan(pos_, count);
    pos_ += count;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_fmat(const FeatureMatrix& m) {
  if (m.data.size() != m.rows * m.cols) fail(Errc::InvalidArgument, "matrix data size does not match shape");
  if (m.ids.size() != m.rows) fail(Errc::BadIds, "matrix has " + std::to_string(m.ids.size()) + " ids for " +
                                                     std::to_string(m.rows) + " rows");
  std::string id_block;
  for (std::size_t i = 0; i < m.ids.size(); ++i) {
    if (m.ids[i].find('\n') != std::string::npos) fail(Errc::BadIds, "sample id contains a newline: row " + std::to_string(i));
    if (i) id_block.push_back('\n');
    id_block += m.ids[i];
  }

  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + m.data.size() * 4 + 8 + id_block.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, kFmatVersion);
  put_u64(out, m.rows);
  put_u64(out, m.cols);
  for (float v : m.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  put_u64(out, id_block.size());
  out.insert(out.end(), id_block.begin(), id_block.end());
  return out;
}

FeatureMatrix decode_fmat(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) fail(Errc::BadMagic, "FMAT bad magic at byte offset 0");
  const std::size_t version_at = r.offset();
  if (auto v = r.u32("version"); v != kFmatVersion) {
    fail(Errc::VersionMismatch, "FMAT version " + std::to_string(v) + " at byte offset " +
                                    std::to_string(version_at) + " (expected 1)");
  }
  const std::uint64_t n = r.u64("row count");
  const std::uint64_t d = r.u64("column count");
  if (d != 0 && n > (bytes.size() / 4) / d) {
    fail(Errc::TruncatedFile, "FMAT truncated at byte offset " + std::to_string(r.offset()) +
                                  ": shape " + std::to_string(n) + "x" + std::to_string(d) +
                                  " exceeds file size");
  }

  FeatureMatrix m;
  m.rows = n;
  m.cols = d;
  m.data.resize(n * d);
  const std::size_t data_at = r.offset();
  auto raw = r.take(n * d * 4, "matrix values");
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= std::uint32_t{raw[4 * i + b]} << (8 * b);
    const float v = std::bit_cast<float>(bits);
    if (!std::isfinite(v)) {
      fail(Errc::NonFiniteValue, "FMAT non-finite value at byte offset " + std::to_string(data_at + 4 * i));
    }
    m.data[i] = v;
  }

  const std::uint64_t id_len = r.u64("id block length");
  const std::size_t ids_at = r.offset();
  auto block = r.take(id_len, "id block");
  std::string text(block.begin(), block.end());
  if (n > 0) {
    std::size_t start = 0;
    while (true) {
      auto nl = text.find('\n', start);
      m.ids.push_back(text.substr(start, nl == std::string::npos ? std::string::npos : nl - start));
      if (nl == std::string::npos) break;
      start = nl + 1;
    }
  } else if (!text.empty()) {
    fail(Errc::BadIds, "FMAT id block at byte offset " + std::to_string(ids_at) + " is non-empty for 0 rows");
  }
  if (m.ids.size() != n) {
    fail(Errc::BadIds, "FMAT id block at byte offset " + std::to_string(ids_at) + " holds " +
                           std::to_string(m.ids.size()) + " ids for " + std::to_string(n) + " rows");
  }
  return m;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::Io, "short write to " + path.string());
}

void write_fmat(const FeatureMatrix& m, const fs::path& path) { write_bytes(path, encode_fmat(m)); }

FeatureMatrix read_fmat(const fs::path& path) { return decode_fmat(read_bytes(path)); }

void validate_feature_matrix(const FeatureMatrix& m) {
  if (m.rows < 2) fail(Errc::InvalidArgument, "feature matrix needs at least 2 rows, got " + std::to_string(m.rows));
  if (m.cols < 1) fail(Errc::InvalidArgument, "feature matrix needs at least 1 column");
  if (m.data.size() != m.rows * m.cols) fail(Errc::InvalidArgument, "matrix data size does not match shape");
  if (m.ids.size() != m.rows) fail(Errc::BadIds, "id count does not match row count");
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    if (!std::isfinite(m.data[i])) {
      fail(Errc::NonFiniteValue, "non-finite value at row " + std::to_string(i / m.cols) + " column " +
                                     std::to_string(i % m.cols));
    }
  }
  std::set<std::string_view> seen;
  for (const auto& id : m.ids) {
    if (id.empty()) fail(Errc::BadIds, "empty sample id");
    if (id.find('\n') != std::string::npos) fail(Errc::BadIds, "sample id contains a newline");
    if (!seen.insert(id).second) fail(Errc::BadIds, "duplicate sample id '" + id + "'");
  }
}

FeatureMatrix load_feature_matrix(const fs::path& path) {
  auto m = read_fmat(path);
  validate_feature_matrix(m);
  return m;
}

void write_feature_matrix(const FeatureMatrix& m, const fs::path& path) {
  validate_feature_matrix(m);
  write_fmat(m, path);
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(Errc::BadJson, path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& doc) {
  const std::string text = doc.dump(2) + "\n";
  write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// ---- manifest ----

bool SampleManifest::has_truth() const {
  return !entries.empty() &&
         std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.true_label.has_value(); });
}

const ManifestEntry* SampleManifest::find(const SampleId& id) const {
  for (const auto& e : entries)
    if (e.id == id) return &e;
  return nullptr;
}

namespace {

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(Errc::BadJson, std::string(what) + ": " + e.what());
  }
}

}  // namespace

json manifest_to_json(const SampleManifest& m) {
  json arr = json::array();
  for (const auto& e : m.entries) {
    arr.push_back({{"id", e.id},
                   {"source_path", e.source_path},
                   {"thumbnail_path", optional_string(e.thumbnail_path)},
                   {"true_label", optional_string(e.true_label)}});
  }
  return arr;
}

SampleManifest manifest_from_json(const json& j) {
  return guarded("sample manifest", [&] {
    if (!j.is_array()) fail(Errc::BadJson, "sample manifest must be a JSON array");
    SampleManifest m;
    for (const auto& row : j) {
      ManifestEntry e;
      e.id = row.at("id").get<std::string>();
      if (e.id.empty()) fail(Errc::BadIds, "sample manifest contains an empty id");
      e.source_path = row.value("source_path", std::string{});
      e.thumbnail_path = read_optional(row, "thumbnail_path");
      e.true_label = read_optional(row, "true_label");
      m.entries.push_back(std::move(e));
    }
    return m;
  });
}

SampleManifest load_manifest(const fs::path& path) { return manifest_from_json(read_json_file(path)); }

void write_manifest(const SampleManifest& m, const fs::path& path) { write_json_file(path, manifest_to_json(m)); }

void check_manifest_matches(const SampleManifest& m, std::span<const SampleId> ids) {
  if (m.entries.size() != ids.size()) {
    fail(Errc::BadIds, "manifest has " + std::to_string(m.entries.size()) + " entries for " +
                           std::to_string(ids.size()) + " samples");
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (m.entries[i].id != ids[i]) {
      fail(Errc::BadIds, "manifest id '" + m.entries[i].id + "' at position " + std::to_string(i) +
                             " does not match sample '" + ids[i] + "'");
    }
  }
}

// ---- label map ----

std::string provenance_name(LabelProvenance p) {
  return p == LabelProvenance::Human ? "HUMAN" : "MAJORITY_ORACLE";
}

json label_map_to_json(const LabelMap& m) {
  json entries = json::object();
  for (const auto& [cluster, label] : m.entries) entries[std::to_string(cluster)] = label;
  return {{"provenance", provenance_name(m.provenance)}, {"entries", entries}};
}

LabelMap label_map_from_json(const json& j) {
  return guarded("label map", [&] {
    LabelMap m;
    const auto prov = j.at("provenance").get<std::string>();
    if (prov == "HUMAN") {
      m.provenance = LabelProvenance::Human;
    } else if (prov == "MAJORITY_ORACLE") {
      m.provenance = LabelProvenance::MajorityOracle;
    } else {
      fail(Errc::BadJson, "unknown label provenance '" + prov + "'");
    }
    for (const auto& [key, value] : j.at("entries").items()) {
      std::size_t used = 0;
      unsigned long idx = 0;
      try {
        idx = std::stoul(key, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != key.size() || key.empty()) fail(Errc::BadJson, "label map key '" + key + "' is not a cluster index");
      auto label = value.get<std::string>();
      if (label.empty()) fail(Errc::BadJson, "empty label for cluster " + key);
      if (!m.entries.emplace(static_cast<std::uint32_t>(idx), std::move(label)).second) {
        fail(Errc::BadJson, "duplicate label map key " + key);
      }
    }
    return m;
  });
}

LabelMap load_label_map(const fs::path& path) { return label_map_from_json(read_json_file(path)); }

void write_label_map(const LabelMap& m, const fs::path& path) { write_json_file(path, label_map_to_json(m)); }

// ---- labeled dataset ----

LabeledDataset build_labeled_dataset(const ConsensusResult& consensus, const LabelMap& labels) {
  LabeledDataset ds;
  for (std::size_t i = 0; i < consensus.size(); ++i) {
    if (!consensus.retained(i)) {
      ds.rejected.push_back(consensus.ids[i]);
      continue;
    }
    const auto cluster = static_cast<std::uint32_t>(consensus.cluster[i]);
    auto it = labels.entries.find(cluster);
    if (it == labels.entries.end()) fail(Errc::MissingLabel, "MissingLabel(" + std::to_string(cluster) + ")");
    ds.labeled.emplace_back(consensus.ids[i], it->second);
  }
  return ds;
}

json labeled_dataset_to_json(const LabeledDataset& ds) {
  json labeled = json::array();
  for (const auto& [id, label] : ds.labeled) labeled.push_back({{"id", id}, {"label", label}});
  return {{"labeled", labeled}, {"rejected", ds.rejected}};
}

LabeledDataset labeled_dataset_from_json(const json& j) {
  return guarded("labeled dataset", [&] {
    LabeledDataset ds;
    for (const auto& row : j.at("labeled")) ds.labeled.emplace_back(row.at("id").get<std::string>(), row.at("label").get<std::string>());
    ds.rejected = j.at("rejected").get<std::vector<std::string>>();
    return ds;
  });
}

LabeledDataset load_labeled_dataset(const fs::path& path) { return labeled_dataset_from_json(read_json_file(path)); }

std::size_t write_labeled_dataset(const SampleManifest& manifest, const ConsensusResult& consensus,
                                  const LabelMap& labels, const fs::path& path) {
  check_manifest_matches(manifest, consensus.ids);
  auto ds = build_labeled_dataset(consensus, labels);
  write_json_file(path, labeled_dataset_to_json(ds));
  return ds.labeled.size();
}

}  // namespace ca
