#include "../support/oracles.hpp"
#include "helpers.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string err;
};

Run cli(const std::string& args) {
  const fs::path err = fs::temp_directory_path() / "maptrix-cli-stderr.txt";
  const std::string cmd = std::string("\"") + MAPTRIX_CLI + "\" " + args + " >/dev/null 2>\"" + err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, testing::slurp(err.string())};
}

std::string data(const std::string& rel) { return "\"" + testing::data_path(rel) + "\""; }

fs::path tmp(const std::string& name) { return fs::temp_directory_path() / name; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("render Australia") {
    const auto out = tmp("maptrix-cli-au.svg");
    const auto lj = tmp("maptrix-cli-au.json");
    const auto diag = tmp("maptrix-cli-au.jsonl");
    const auto r = cli("render " + data("au/flows.csv") + " " + data("au/boundaries.geojson") + " -o " + out.string() +
                       " --layout-json " + lj.string() + " --diagnostics " + diag.string());
    CHECK(r.code == 0);
    const auto c = oracle::census(testing::slurp(out.string()));
    CHECK(c.leader_paths == 16);
    CHECK(c.cell_rects == 64);
    const auto j = nlohmann::json::parse(testing::slurp(lj.string()));
    CHECK(j.at("mode") == "same-country");
    CHECK_FALSE(testing::slurp(diag.string()).empty());
  }

  TEST_CASE("inverted filter exits with the range error code") {
    const auto r = cli("render " + data("au/flows.csv") + " " + data("au/boundaries.geojson") + " -o " +
                       tmp("maptrix-cli-x.svg").string() + " --filter 10:5");
    CHECK(r.code == 6);
    CHECK(r.err.find("RangeError") != std::string::npos);
  }

  TEST_CASE("missing boundaries for a CSV id") {
    const auto r = cli("render " + data("us/flows.csv") + " " + data("au/boundaries.geojson") + " -o " +
                       tmp("maptrix-cli-x.svg").string());
    CHECK(r.code == 3);
  }

  TEST_CASE("two-country render") {
    const auto out = tmp("maptrix-cli-nzus.svg");
    const auto r = cli("render " + data("nz_us/flows.csv") + " " + data("nz/boundaries.geojson") + " " +
                       data("us/boundaries.geojson") + " --mode two-country -o " + out.string());
    CHECK(r.code == 0);
    CHECK(oracle::census(testing::slurp(out.string())).leader_paths == 16 + 51);
  }

  TEST_CASE("grouped US render") {
    const auto lj = tmp("maptrix-cli-us.json");
    const auto r = cli("render " + data("us/flows.csv") + " " + data("us/boundaries.geojson") + " --group " +
                       data("us/groups.json") + " -o " + tmp("maptrix-cli-us.svg").string() + " --layout-json " +
                       lj.string());
    CHECK(r.code == 0);
    CHECK(nlohmann::json::parse(testing::slurp(lj.string())).at("origin_count") == 44);
  }

  TEST_CASE("bad usage") {
    CHECK(cli("render").code == 2);
    CHECK(cli("frobnicate").code == 2);
  }
}
