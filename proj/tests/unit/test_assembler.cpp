#include "maptrix/errors.hpp"
#include "maptrix/layout_json.hpp"
#include "maptrix/maptrix_assembler.hpp"

#include "../support/oracles.hpp"
#include "helpers.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <set>

using namespace maptrix;

namespace {

std::shared_ptr<const FlowDataset> fixture(const std::string& name) {
  return std::make_shared<const FlowDataset>(testing::load_fixture(name));
}

std::shared_ptr<const FlowDataset> nz_us() {
  std::ifstream flows(testing::data_path("nz_us/flows.csv"));
  std::ifstream o(testing::data_path("nz/boundaries.geojson"));
  std::ifstream d(testing::data_path("us/boundaries.geojson"));
  return std::make_shared<const FlowDataset>(load_two_country(flows, o, d, Projection{}));
}

std::vector<LeaderRoute> all_routes(const MapTrixLayout& l) {
  std::vector<LeaderRoute> out = l.origin_leaders;
  out.insert(out.end(), l.dest_leaders.begin(), l.dest_leaders.end());
  return out;
}

double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (a + t * ab - p).norm();
}

std::shared_ptr<const FlowDataset> random_dataset(int n, std::mt19937_64& rng) {
  auto regions = oracle::jittered_tiles(n, rng);
  return std::make_shared<const FlowDataset>(regions, regions, oracle::random_flows(n, n, rng));
}

}  // namespace

TEST_SUITE("assembler") {
  TEST_CASE("Australia: 16 leaders and 64 cells") {
    const auto l = layout(fixture("au"));
    CHECK(l.mode == LayoutMode::same_country);
    CHECK(l.leader_count() == 16);
    CHECK(l.cell_colors.size() == 64);
    CHECK(l.matrix.rows == 8);
    CHECK(l.matrix.cols == 8);
    CHECK(oracle::crossings(l.origin_leaders).empty());
    CHECK(oracle::crossings(l.dest_leaders).empty());
    CHECK(oracle::crossings(all_routes(l)).empty());
  }

  TEST_CASE("a single region still gets two leaders") {
    std::vector<Region> one{testing::square_region("A", 0, 0, 50)};
    Eigen::MatrixXd f(1, 1);
    f << 3.0;
    const auto l = layout(std::make_shared<const FlowDataset>(one, one, f));
    CHECK(l.leader_count() == 2);
    CHECK(l.cell_colors.size() == 1);
  }

  TEST_CASE("layouts are deterministic") {
    const auto a = layout_to_json(layout(fixture("au")));
    const auto b = layout_to_json(layout(fixture("au")));
    CHECK(a.dump() == b.dump());
  }

  TEST_CASE("two-country New Zealand to US") {
    const auto l = layout_two_country(nz_us());
    CHECK(l.mode == LayoutMode::two_country);
    CHECK(l.origin_leaders.size() == 16);
    CHECK(l.dest_leaders.size() == 51);
    CHECK(l.cell_colors.size() == 16 * 51);
    CHECK(oracle::crossings(l.origin_leaders).empty());
    CHECK(oracle::crossings(l.dest_leaders).empty());
  }

  TEST_CASE("two-country with one dataset on both sides") {
    const auto l = layout_two_country(fixture("au"));
    CHECK(l.leader_count() == 16);
    CHECK(oracle::crossings(l.origin_leaders).empty());
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(layout(std::make_shared<const FlowDataset>()), ValidationError);
    CHECK_THROWS_AS(layout(nz_us()), ModeError);
    LayoutConfig tight;
    tight.labelling.k = 0.05;
    tight.max_corridor = 100.0;
    CHECK_THROWS_AS(layout(fixture("au"), tight), SteepLeaderError);
  }

  TEST_CASE("range filter keeps exactly the regions with a flow in range") {
    const auto src = fixture("us");
    const auto base = layout(src);
    const Eigen::MatrixXd& f = src->flows();
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      std::uniform_real_distribution<double> u(0.0, f.maxCoeff());
      double lo = u(rng), hi = u(rng);
      if (lo > hi) std::swap(lo, hi);
      std::set<std::string> expected;
      for (Eigen::Index i = 0; i < f.rows(); ++i)
        for (Eigen::Index j = 0; j < f.cols(); ++j)
          if (f(i, j) > 0 && f(i, j) >= lo && f(i, j) <= hi) {
            expected.insert(src->origins()[i].id);
            expected.insert(src->destinations()[j].id);
          }
      SelectionState sel;
      sel.range = std::array<double, 2>{lo, hi};
      if (expected.empty()) {
        CHECK_THROWS(relayout(base, sel));
        continue;
      }
      const auto l = relayout(base, sel);
      std::set<std::string> got;
      for (const auto& r : l.dataset->origins()) got.insert(r.id);
      CHECK(got == expected);
      CHECK(oracle::crossings(l.origin_leaders).empty());
    }
  }

  TEST_CASE("US groups collapse 51 regions into 44") {
    const auto base = layout(fixture("us"));
    SelectionState sel;
    sel.groups = groups_from_json(nlohmann::json::parse(testing::slurp(testing::data_path("us/groups.json"))));
    const auto l = relayout(base, sel);
    CHECK(l.dataset->origin_count() == 44);
    CHECK(l.leader_count() == 88);
    CHECK(l.dataset->grand_total() == doctest::Approx(base.dataset->grand_total()));
  }

  TEST_CASE("relayout with an empty selection reproduces the base layout") {
    const auto base = layout(fixture("au"));
    const auto again = relayout(base, SelectionState{});
    CHECK(layout_to_json(base).dump() == layout_to_json(again).dump());
    const auto twice = relayout(again, SelectionState{});
    CHECK(layout_to_json(twice).dump() == layout_to_json(again).dump());
  }

  TEST_CASE("ports lie on the matrix edges") {
    const auto l = layout(fixture("us"));
    const auto& m = l.matrix;
    const double h = m.cell_size / std::sqrt(2.0);
    const Eigen::Vector2d L = m.left;
    const Eigen::Vector2d top = L + m.rows * Eigen::Vector2d(h, -h);
    const Eigen::Vector2d bottom = L + m.cols * Eigen::Vector2d(h, h);
    for (const auto& r : l.origin_leaders) CHECK(point_segment_distance(r.port.position, L, top) <= 1e-6);
    for (const auto& r : l.dest_leaders) CHECK(point_segment_distance(r.port.position, L, bottom) <= 1e-6);
  }

  TEST_CASE("same-country layouts share one ordering") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 2 + trial;
      const auto l = layout(random_dataset(n, rng));
      CHECK(l.row_order == l.col_order);
      for (int i = 0; i < n; ++i) CHECK(l.origin_leaders[i].port.index == l.dest_leaders[i].port.index);
      CHECK(oracle::crossings(l.origin_leaders).empty());
      CHECK(oracle::crossings(l.dest_leaders).empty());
    }
  }

  TEST_CASE("geometry cache is reused across relayouts") {
    const auto base = layout(fixture("au"));
    const auto before = base.cache->hits();
    SelectionState sel;
    sel.range = std::array<double, 2>{0.0, base.dataset->max_flow()};
    const auto l = relayout(base, sel);
    CHECK(base.cache->hits() > before);
    CHECK(l.leader_count() == base.leader_count());
  }

  TEST_CASE("unrefined layouts are crossing-free too") {
    LayoutConfig cfg;
    cfg.refine = false;
    const auto l = layout(fixture("us"), cfg);
    CHECK(oracle::crossings(l.origin_leaders).empty());
    CHECK(oracle::crossings(l.dest_leaders).empty());
  }
}
