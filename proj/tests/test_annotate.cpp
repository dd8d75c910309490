#include <doctest.h>

#include <algorithm>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ca/annotate.hpp"
#include "ca/dataio.hpp"
#include "ca/error.hpp"
#include "ca/service.hpp"
#include "support.hpp"

using namespace ca;
using nlohmann::json;

namespace {

struct Fixture {
  ConsensusResult consensus;
  FeatureMatrix embedding;
  SampleManifest manifest;
};

// Random 2-d embedding with `k` clusters; every fifth sample is rejected.
Fixture random_fixture(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Fixture f;
  f.embedding = test::random_matrix(n, 2, seed);
  f.consensus.ids = f.embedding.ids;
  f.consensus.k = k;
  std::size_t rejected = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool reject = i % 5 == 4;
    rejected += reject;
    f.consensus.cluster.push_back(reject ? kRejected : static_cast<std::int32_t>(rng() % k));
  }
  f.consensus.reject_rate = static_cast<double>(rejected) / static_cast<double>(n);
  for (const auto& id : f.embedding.ids) f.manifest.entries.push_back({id, "raw/" + id, std::nullopt, std::nullopt});
  return f;
}

}  // namespace

TEST_CASE("manifests partition the retained samples") {
  const auto f = random_fixture(100, 6, 3);
  const auto ms = build_manifests(f.consensus, f.embedding, f.manifest, 4);
  std::vector<SampleId> seen;
  for (const auto& m : ms) {
    CHECK(m.exemplars.size() == std::min<std::size_t>(4, m.size()));
    for (const auto& id : m.members) {
      const auto i = static_cast<std::size_t>(std::find(f.consensus.ids.begin(), f.consensus.ids.end(), id) -
                                              f.consensus.ids.begin());
      CHECK(f.consensus.cluster[i] == static_cast<std::int32_t>(m.cluster));
      seen.push_back(id);
    }
  }
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  CHECK(seen.size() == f.consensus.retained_count());
  CHECK(std::is_sorted(ms.begin(), ms.end(), [](const auto& a, const auto& b) { return a.cluster < b.cluster; }));
}

TEST_CASE("exemplars follow centroid distance") {
  const auto f = random_fixture(60, 3, 9);
  const auto ms = build_manifests(f.consensus, f.embedding, f.manifest, 100);
  for (const auto& m : ms) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < 60; ++i)
      if (f.consensus.cluster[i] == static_cast<std::int32_t>(m.cluster)) rows.push_back(i);
    double cx = 0.0, cy = 0.0;
    for (auto i : rows) {
      cx += f.embedding(i, 0);
      cy += f.embedding(i, 1);
    }
    cx /= static_cast<double>(rows.size());
    cy /= static_cast<double>(rows.size());
    auto dist = [&](std::size_t i) {
      return (f.embedding(i, 0) - cx) * (f.embedding(i, 0) - cx) + (f.embedding(i, 1) - cy) * (f.embedding(i, 1) - cy);
    };
    std::stable_sort(rows.begin(), rows.end(), [&](auto a, auto b) { return dist(a) < dist(b); });
    std::vector<SampleId> expected;
    for (auto i : rows) expected.push_back(f.consensus.ids[i]);
    CHECK(m.exemplars == expected);
  }
}

TEST_CASE("singleton cluster is its own exemplar") {
  auto f = random_fixture(10, 2, 1);
  f.consensus.cluster = {0, 0, 0, 0, 1, 0, 0, 0, 0, 0};
  f.consensus.reject_rate = 0.0;
  const auto ms = build_manifests(f.consensus, f.embedding, f.manifest);
  REQUIRE(ms.size() == 2);
  CHECK(ms[1].members == std::vector<SampleId>{"s4"});
  CHECK(ms[1].exemplars == std::vector<SampleId>{"s4"});
}

TEST_CASE("manifests reject mismatched ids") {
  auto f = random_fixture(10, 2, 1);
  f.embedding.ids[3] = "other";
  CHECK_THROWS_AS(build_manifests(f.consensus, f.embedding, f.manifest), Error);
}

TEST_CASE("label map application") {
  const auto f = random_fixture(200, 20, 5);
  LabelMap labels;
  for (std::uint32_t c = 0; c < 20; ++c) labels.entries[c] = "label_" + std::to_string(c % 4);
  const auto out = apply_label_map(f.consensus, labels);
  for (std::size_t i = 0; i < 200; ++i) {
    if (!f.consensus.retained(i)) {
      CHECK_FALSE(out[i].has_value());
    } else {
      CHECK(*out[i] == "label_" + std::to_string(f.consensus.cluster[i] % 4));
    }
  }

  labels.entries.erase(7);
  try {
    apply_label_map(f.consensus, labels);
    FAIL("expected MissingLabel");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingLabel);
    CHECK(std::string(e.what()).find("MissingLabel(7)") != std::string::npos);
  }
}

TEST_CASE("sweep rows") {
  const auto blobs = test::simple_blobs(4, 30, 3, 30.0, 0.5, 2);
  SampleManifest truth;
  for (std::size_t i = 0; i < blobs.x.rows; ++i) {
    truth.entries.push_back({blobs.x.ids[i], "raw", std::nullopt, "c" + std::to_string(blobs.labels[i])});
  }
  ClusterSettings cs;
  cs.birch_threshold = 0.5;
  const auto rows = sweep_clusters(blobs.x, {4, 6}, cs, VoteSettings{}, &truth);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].clusters == 4);
  CHECK(*rows[0].accuracy == doctest::Approx(100.0));
  CHECK(rows[0].reject_rate == doctest::Approx(0.0));
  CHECK(rows[0].manifests == 4);
  const auto j = sweep_to_json(rows, "k_over");
  CHECK(j["rows"].size() == 2);
  CHECK(sweep_to_text(rows, "k_over").find("k_over") == 0);

  const auto unlabeled = sweep_clusters(blobs.x, {4}, cs, VoteSettings{}, nullptr);
  CHECK_FALSE(unlabeled[0].accuracy.has_value());
  CHECK_THROWS_AS(sweep_clusters(blobs.x, {1}, cs, VoteSettings{}, nullptr), Error);
}

TEST_CASE("url encoding") {
  CHECK(url_encode("abc-_.~09") == "abc-_.~09");
  CHECK(url_encode("a b/c") == "a%20b%2Fc");
}

TEST_CASE("annotation http walkthrough") {
  test::TempDir dir("service");
  auto f = random_fixture(40, 4, 7);
  const auto thumb = dir / "s0.png";
  const std::vector<std::uint8_t> png{0x89, 'P', 'N', 'G', 0, 1, 2};
  write_bytes(thumb, png);
  f.manifest.entries[0].thumbnail_path = thumb.string();
  f.manifest.entries[1].thumbnail_path = (dir / "missing.png").string();

  ServiceOptions opts;
  opts.output_dir = dir.path();
  AnnotateService service(f.consensus, f.embedding, f.manifest, opts);
  HttpServer server(service);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread t([&] { server.listen(); });
  server.wait_until_ready();

  httplib::Client cli("127.0.0.1", port);

  auto res = cli.Get("/api/status");
  REQUIRE(res);
  CHECK(res->status == 200);
  auto body = json::parse(res->body);
  CHECK(body["n"] == 40);
  CHECK(body["rejected"] == 8);
  CHECK(body["retained"] == 32);
  CHECK(body["revision"] == 0);

  res = cli.Get("/api/clusters");
  REQUIRE(res);
  const auto list = json::parse(res->body);
  CHECK(list.size() == 4);
  CHECK_FALSE(list[0].contains("members"));
  std::size_t total = 0;
  for (const auto& c : list) total += c["size"].get<std::size_t>();
  CHECK(total == 32);

  const auto first = f.consensus.cluster[0];
  res = cli.Get("/api/clusters/" + std::to_string(first));
  REQUIRE(res);
  CHECK(res->status == 200);
  body = json::parse(res->body);
  CHECK(body["members"].size() == body["size"]);
  CHECK(body["thumbnail_urls"] == json::array({"/api/samples/s0/thumbnail"}));

  res = cli.Get("/api/clusters/99");
  REQUIRE(res);
  CHECK(res->status == 404);

  res = cli.Get("/api/samples/s0/thumbnail");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Content-Type") == "image/png");
  CHECK(res->body == std::string(png.begin(), png.end()));
  res = cli.Get("/api/samples/s1/thumbnail");
  REQUIRE(res);
  CHECK(res->status == 404);
  res = cli.Get("/api/samples/s2/thumbnail");
  REQUIRE(res);
  CHECK(res->status == 404);

  res = cli.Put("/api/clusters/0/label", R"({"name":"x"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  res = cli.Put("/api/clusters/0/label", "not json", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  res = cli.Put("/api/clusters/0/label", R"({"label":""})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  res = cli.Put("/api/clusters/99/label", R"({"label":"cat"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 404);

  res = cli.Put("/api/clusters/0/label", R"({"label":"cat"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["revision"] == 1);
  CHECK(load_label_map(dir / "label_map.json").entries == std::map<std::uint32_t, std::string>{{0, "cat"}});

  res = cli.Post("/api/finalize", "", "application/json");
  REQUIRE(res);
  CHECK(res->status == 409);
  CHECK(json::parse(res->body)["unlabeled"] == json::array({1, 2, 3}));
  CHECK_FALSE(std::filesystem::exists(dir / "labeled_dataset.json"));

  res = cli.Delete("/api/clusters/0/label");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["revision"] == 2);
  CHECK(load_label_map(dir / "label_map.json").entries.empty());

  for (int c = 0; c < 4; ++c) {
    res = cli.Put("/api/clusters/" + std::to_string(c) + "/label", json{{"label", c % 2 ? "dog" : "cat"}}.dump(),
                  "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
  }
  res = cli.Get("/api/status");
  REQUIRE(res);
  body = json::parse(res->body);
  CHECK(body["labeled_clusters"] == 4);
  CHECK(body["revision"] == 6);

  res = cli.Post("/api/finalize", "", "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  body = json::parse(res->body);
  CHECK(body["labeled_count"] == 32);
  const auto bytes = read_bytes(dir / "labeled_dataset.json");
  const auto ds = load_labeled_dataset(dir / "labeled_dataset.json");
  CHECK(ds == build_labeled_dataset(f.consensus, service.label_map()));

  res = cli.Post("/api/finalize", "", "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(read_bytes(dir / "labeled_dataset.json") == bytes);
  CHECK(load_label_map(dir / "label_map.json") == service.label_map());

  server.stop();
  t.join();
}

TEST_CASE("service restores persisted labels") {
  const auto f = random_fixture(30, 3, 2);
  LabelMap initial;
  initial.entries = {{1, "kept"}};
  AnnotateService service(f.consensus, f.embedding, f.manifest, ServiceOptions{}, initial);
  CHECK(service.status()["labeled_clusters"] == 1);
  CHECK((*service.cluster(1))["label"] == "kept");
  CHECK_FALSE(service.set_label(9, "x").has_value());
  CHECK_THROWS_AS(service.set_label(0, ""), Error);
}
