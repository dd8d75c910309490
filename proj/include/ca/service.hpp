#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "ca/annotate.hpp"
#include "ca/types.hpp"

namespace ca {

struct ServiceOptions {
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> ui_dir;
  std::size_t exemplars = kDefaultExemplars;
};

// State behind the labelling HTTP API. Readers run concurrently; label writes
// and finalize take the lock exclusively. Every mutation bumps a global
// revision counter and rewrites <output_dir>/label_map.json.
class AnnotateService {
 public:
  AnnotateService(ConsensusResult consensus, FeatureMatrix embedding, SampleManifest manifest, ServiceOptions options,
                  std::optional<LabelMap> initial_labels = std::nullopt);

  nlohmann::json status() const;
  nlohmann::json clusters() const;
  std::optional<nlohmann::json> cluster(std::uint32_t index) const;
  std::optional<std::filesystem::path> thumbnail(const SampleId& id) const;

  // nullopt when the cluster is unknown or empty.
  std::optional<nlohmann::json> set_label(std::uint32_t index, const std::string& label);
  std::optional<nlohmann::json> clear_label(std::uint32_t index);

  struct FinalizeOutcome {
    bool ok = false;
    nlohmann::json body;  // {labeled_count, output_path} or {unlabeled:[...]}
  };
  FinalizeOutcome finalize();

  LabelMap label_map() const;
  const ServiceOptions& options() const { return options_; }

 private:
  ClusterManifest* find(std::uint32_t index);
  const ClusterManifest* find(std::uint32_t index) const;
  LabelMap label_map_locked() const;
  void persist_locked() const;

  mutable std::shared_mutex mu_;
  ConsensusResult consensus_;
  SampleManifest manifest_;
  ServiceOptions options_;
  std::vector<ClusterManifest> clusters_;
  std::uint64_t revision_ = 0;
};

// Percent-encodes every byte outside [A-Za-z0-9-_.~].
std::string url_encode(const std::string& s);

// cpp-httplib front end for AnnotateService.
class HttpServer {
 public:
  explicit HttpServer(AnnotateService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Returns the bound port (port 0 picks a free one).
  int bind(const std::string& host, int port);
  // Blocks until stop().
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ca
