#include "maptrix/flow_service.hpp"

#include "../support/oracles.hpp"
#include "helpers.hpp"

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <filesystem>
#include <thread>

using namespace maptrix;
using nlohmann::json;

namespace {

struct Au {
  std::string flows = testing::slurp(testing::data_path("au/flows.csv"));
  std::string bounds = testing::slurp(testing::data_path("au/boundaries.geojson"));
};

std::string open(FlowService& svc) {
  const Au au;
  const auto r = svc.create_session(au.flows, au.bounds);
  REQUIRE(r.status == 201);
  return json::parse(r.body).at("session").get<std::string>();
}

json put(FlowService& svc, const std::string& id, const json& body, int expect = 200) {
  const auto r = svc.put_selection(id, body.dump());
  CHECK(r.status == expect);
  return json::parse(r.body);
}

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("create, read and render a session") {
    FlowService svc;
    const auto id = open(svc);
    CHECK(svc.session_count() == 1);
    const auto r = svc.get_layout(id);
    REQUIRE(r.status == 200);
    const auto j = json::parse(r.body);
    CHECK(j.at("version") == 0);
    CHECK(j.at("layout").at("leaders").at("origin").size() == 8);
    CHECK(j.at("layout").at("cells").size() == 64);
    const auto svg = svc.get_svg(id);
    CHECK(svg.status == 200);
    CHECK(svg.content_type == "image/svg+xml");
    CHECK(oracle::census(svg.body).leader_paths == 16);
    CHECK(json::parse(svc.health().body).at("status") == "ok");
  }

  TEST_CASE("highlight-only updates reuse the layout") {
    FlowService svc;
    const auto id = open(svc);
    const auto base = json::parse(svc.get_layout(id).body);
    const auto j = put(svc, id, {{"base_version", 0}, {"highlights", json::array({{{"origin", "QLD"}}})}});
    CHECK(j.at("relayout") == false);
    CHECK(j.at("version") == 1);
    CHECK(j.at("layout_hash") == base.at("layout_hash"));
    CHECK(oracle::census(svc.get_svg(id).body).highlighted_cells == 8);
  }

  TEST_CASE("a range covering every flow keeps the layout hash") {
    FlowService svc;
    const auto id = open(svc);
    const auto base = json::parse(svc.get_layout(id).body);
    const double max_flow = base.at("layout").at("max_flow").get<double>();
    const auto j = put(svc, id, {{"base_version", 0}, {"range", {0.0, max_flow}}});
    CHECK(j.at("relayout") == true);
    CHECK(j.at("layout_hash") == base.at("layout_hash"));
  }

  TEST_CASE("a narrow range changes the layout") {
    FlowService svc;
    const auto id = open(svc);
    const auto base = json::parse(svc.get_layout(id).body);
    const double max_flow = base.at("layout").at("max_flow").get<double>();
    const auto j = put(svc, id, {{"range", {max_flow * 0.5, max_flow}}});
    CHECK(j.at("layout_hash") != base.at("layout_hash"));
    CHECK(j.at("layout").at("origin_count").get<int>() < 8);
    // Clearing the range returns to the cached base.
    const auto back = put(svc, id, {{"range", nullptr}});
    CHECK(back.at("layout_hash") == base.at("layout_hash"));
  }

  TEST_CASE("errors") {
    FlowService svc;
    const auto id = open(svc);
    put(svc, id, {{"base_version", 0}, {"highlights", json::array()}});
    const auto conflict = put(svc, id, {{"base_version", 0}}, 409);
    CHECK(conflict.at("error") == "VersionConflict");
    CHECK(svc.get_layout("nope").status == 404);
    CHECK(svc.get_svg("nope").status == 404);
    CHECK(put(svc, id, {{"range", {5.0, 1.0}}}, 400).at("error") == "RangeError");
    CHECK(put(svc, id, {{"highlights", json::array({{{"origin", "XX"}}})}}, 400).contains("message"));
    CHECK(svc.put_selection(id, "not json").status == 400);
    const auto bad = svc.create_session("origin,A\nA,1\n", testing::square_features({"B"}));
    CHECK(bad.status == 400);
    CHECK(json::parse(bad.body).at("error") == "IngestError");
  }

  TEST_CASE("sessions survive a restart through snapshots") {
    const auto dir = std::filesystem::temp_directory_path() / "maptrix-snapshot-test";
    std::filesystem::remove_all(dir);
    ServiceConfig cfg;
    cfg.snapshot_dir = dir;
    std::string id, hash;
    {
      FlowService svc(cfg);
      id = open(svc);
      hash = put(svc, id, {{"highlights", json::array({{{"origin", "VIC"}}})}}).at("layout_hash");
      svc.snapshot();
    }
    FlowService again(cfg);
    CHECK(again.session_count() == 1);
    const auto j = json::parse(again.get_layout(id).body);
    CHECK(j.at("version") == 1);
    CHECK(j.at("layout_hash") == hash);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("multipart upload over HTTP") {
    FlowService svc;
    httplib::Server server;
    svc.install(server);
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const Au au;
    httplib::Client client("127.0.0.1", port);
    httplib::MultipartFormDataItems items{{"flows", au.flows, "flows.csv", "text/csv"},
                                          {"boundaries", au.bounds, "au.geojson", "application/geo+json"}};
    auto created = client.Post("/datasets", items);
    REQUIRE(created);
    CHECK(created->status == 201);
    const auto id = json::parse(created->body).at("session").get<std::string>();

    auto layout = client.Get("/sessions/" + id + "/layout");
    REQUIRE(layout);
    CHECK(layout->status == 200);

    auto sel = client.Put("/sessions/" + id + "/selection", R"({"base_version":0,"highlights":[{"origin":"NSW"}]})",
                          "application/json");
    REQUIRE(sel);
    CHECK(sel->status == 200);

    auto svg = client.Get("/sessions/" + id + "/svg");
    REQUIRE(svg);
    CHECK(svg->get_header_value("Content-Type") == "image/svg+xml");
    CHECK(oracle::census(svg->body).highlighted_cells == 8);

    auto missing = client.Get("/sessions/none/layout");
    REQUIRE(missing);
    CHECK(missing->status == 404);

    server.stop();
    t.join();
  }
}
