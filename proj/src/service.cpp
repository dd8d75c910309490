#include "ca/service.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>

#include <httplib.h>

#include "ca/dataio.hpp"
#include "ca/error.hpp"
#include "ca/log.hpp"

namespace ca {

using nlohmann::json;

std::string url_encode(const std::string& s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 15]);
    }
  }
  return out;
}

AnnotateService::AnnotateService(ConsensusResult consensus, FeatureMatrix embedding, SampleManifest manifest,
                                 ServiceOptions options, std::optional<LabelMap> initial_labels)
    : consensus_(std::move(consensus)), manifest_(std::move(manifest)), options_(std::move(options)) {
  clusters_ = build_manifests(consensus_, embedding, manifest_, options_.exemplars);
  if (initial_labels) {
    for (auto& c : clusters_) {
      auto it = initial_labels->entries.find(c.cluster);
      if (it != initial_labels->entries.end()) c.assigned_label = it->second;
    }
  }
}

ClusterManifest* AnnotateService::find(std::uint32_t index) {
  auto it = std::find_if(clusters_.begin(), clusters_.end(), [&](const auto& c) { return c.cluster == index; });
  return it == clusters_.end() ? nullptr : &*it;
}

const ClusterManifest* AnnotateService::find(std::uint32_t index) const {
  return const_cast<AnnotateService*>(this)->find(index);
}

json AnnotateService::status() const {
  std::shared_lock lock(mu_);
  const auto retained = consensus_.retained_count();
  const auto labeled = std::count_if(clusters_.begin(), clusters_.end(), [](const auto& c) { return c.assigned_label.has_value(); });
  return {{"n", consensus_.size()},
          {"retained", retained},
          {"rejected", consensus_.size() - retained},
          {"clusters", clusters_.size()},
          {"labeled_clusters", labeled},
          {"revision", revision_}};
}

json AnnotateService::clusters() const {
  std::shared_lock lock(mu_);
  json arr = json::array();
  for (const auto& c : clusters_) arr.push_back(cluster_manifest_to_json(c, false));
  return arr;
}

std::optional<json> AnnotateService::cluster(std::uint32_t index) const {
  std::shared_lock lock(mu_);
  const auto* c = find(index);
  if (!c) return std::nullopt;
  auto j = cluster_manifest_to_json(*c, true);
  json urls = json::array();
  for (const auto& id : c->exemplars) {
    const auto* e = manifest_.find(id);
    if (e && e->thumbnail_path) urls.push_back("/api/samples/" + url_encode(id) + "/thumbnail");
  }
  j["thumbnail_urls"] = urls;
  return j;
}

std::optional<std::filesystem::path> AnnotateService::thumbnail(const SampleId& id) const {
  std::shared_lock lock(mu_);
  const auto* e = manifest_.find(id);
  if (!e || !e->thumbnail_path) return std::nullopt;
  std::filesystem::path p(*e->thumbnail_path);
  if (!std::filesystem::is_regular_file(p)) return std::nullopt;
  return p;
}

LabelMap AnnotateService::label_map_locked() const {
  LabelMap m;
  m.provenance = LabelProvenance::Human;
  for (const auto& c : clusters_)
    if (c.assigned_label) m.entries[c.cluster] = *c.assigned_label;
  return m;
}

LabelMap AnnotateService::label_map() const {
  std::shared_lock lock(mu_);
  return label_map_locked();
}

void AnnotateService::persist_locked() const {
  if (!options_.output_dir.empty()) write_label_map(label_map_locked(), options_.output_dir / "label_map.json");
}

std::optional<json> AnnotateService::set_label(std::uint32_t index, const std::string& label) {
  if (label.empty()) fail(Errc::InvalidArgument, "label must be non-empty");
  std::unique_lock lock(mu_);
  auto* c = find(index);
  if (!c) return std::nullopt;
  c->assigned_label = label;
  c->revision = ++revision_;
  persist_locked();
  return json{{"cluster", index}, {"label", label}, {"revision", revision_}};
}

std::optional<json> AnnotateService::clear_label(std::uint32_t index) {
  std::unique_lock lock(mu_);
  auto* c = find(index);
  if (!c) return std::nullopt;
  c->assigned_label.reset();
  c->revision = ++revision_;
  persist_locked();
  return json{{"cluster", index}, {"label", nullptr}, {"revision", revision_}};
}

AnnotateService::FinalizeOutcome AnnotateService::finalize() {
  std::unique_lock lock(mu_);
  FinalizeOutcome out;
  json unlabeled = json::array();
  for (const auto& c : clusters_)
    if (!c.assigned_label) unlabeled.push_back(c.cluster);
  if (!unlabeled.empty()) {
    out.body = {{"error", "unlabeled clusters"}, {"unlabeled", unlabeled}};
    return out;
  }
  const auto path = options_.output_dir / "labeled_dataset.json";
  const auto labels = label_map_locked();
  write_label_map(labels, options_.output_dir / "label_map.json");
  const auto count = write_labeled_dataset(manifest_, consensus_, labels, path);
  out.ok = true;
  out.body = {{"labeled_count", count}, {"output_path", path.string()}};
  return out;
}

// ---- HTTP ----

namespace {

std::string content_type_for(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  if (ext == ".bmp") return "image/bmp";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".tif" || ext == ".tiff") return "image/tiff";
  return "application/octet-stream";
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

std::optional<std::uint32_t> parse_index(const std::string& s) {
  if (s.empty() || s.size() > 9) return std::nullopt;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
  return static_cast<std::uint32_t>(std::stoul(s));
}

}  // namespace

struct HttpServer::Impl {
  explicit Impl(AnnotateService& s) : service(s) {}
  AnnotateService& service;
  httplib::Server server;
};

HttpServer::HttpServer(AnnotateService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& svr = impl_->server;
  auto& svc = impl_->service;

  svr.Get("/api/status", [&svc](const httplib::Request&, httplib::Response& res) { send_json(res, svc.status()); });
  svr.Get("/api/clusters", [&svc](const httplib::Request&, httplib::Response& res) { send_json(res, svc.clusters()); });
  svr.Get(R"(/api/clusters/(\d+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    const auto idx = parse_index(req.matches[1]);
    const auto body = idx ? svc.cluster(*idx) : std::nullopt;
    if (!body) return send_json(res, {{"error", "no such cluster"}}, 404);
    send_json(res, *body);
  });
  svr.Get(R"(/api/samples/(.+)/thumbnail)", [&svc](const httplib::Request& req, httplib::Response& res) {
    const auto path = svc.thumbnail(req.matches[1]);
    if (!path) return send_json(res, {{"error", "no thumbnail"}}, 404);
    const auto bytes = read_bytes(*path);
    res.set_content(std::string(bytes.begin(), bytes.end()), content_type_for(*path));
  });
  svr.Put(R"(/api/clusters/(\d+)/label)", [&svc](const httplib::Request& req, httplib::Response& res) {
    const auto idx = parse_index(req.matches[1]);
    std::string label;
    try {
      const auto body = json::parse(req.body);
      label = body.at("label").get<std::string>();
    } catch (const json::exception&) {
      return send_json(res, {{"error", "body must be {\"label\": \"<string>\"}"}}, 400);
    }
    if (label.empty()) return send_json(res, {{"error", "label must be non-empty"}}, 400);
    const auto out = idx ? svc.set_label(*idx, label) : std::nullopt;
    if (!out) return send_json(res, {{"error", "no such cluster"}}, 404);
    send_json(res, *out);
  });
  svr.Delete(R"(/api/clusters/(\d+)/label)", [&svc](const httplib::Request& req, httplib::Response& res) {
    const auto idx = parse_index(req.matches[1]);
    const auto out = idx ? svc.clear_label(*idx) : std::nullopt;
    if (!out) return send_json(res, {{"error", "no such cluster"}}, 404);
    send_json(res, *out);
  });
  svr.Post("/api/finalize", [&svc](const httplib::Request&, httplib::Response& res) {
    auto out = svc.finalize();
    send_json(res, out.body, out.ok ? 200 : 409);
  });
  svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    log().error("http: {}", what);
    send_json(res, {{"error", what}}, 500);
  });

  if (svc.options().ui_dir && std::filesystem::is_directory(*svc.options().ui_dir)) {
    svr.set_mount_point("/", svc.options().ui_dir->string());
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  auto& svr = impl_->server;
  if (port == 0) {
    const int p = svr.bind_to_any_port(host);
    if (p < 0) fail(Errc::Io, "cannot bind " + host);
    return p;
  }
  if (!svr.bind_to_port(host, port)) fail(Errc::Io, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace ca
