#include "maptrix/errors.hpp"
#include "maptrix/flow_model.hpp"

#include "../support/oracles.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

using namespace maptrix;
using testing::square_region;

namespace {

FlowDataset two_squares(Eigen::MatrixXd flows) {
  std::vector<Region> r{square_region("A", 0, 0, 1), square_region("B", 1, 0, 1)};
  return FlowDataset(r, r, std::move(flows));
}

FlowDataset from_strings(const std::string& csv, const std::string& geo) {
  std::istringstream a(csv), b(geo);
  return load_dataset(a, b, Projection{});
}

/// Tiles as both origins and destinations, with random flows.
FlowDataset random_tiles(int n, std::mt19937_64& rng) {
  auto tiles = oracle::jittered_tiles(n, rng);
  return FlowDataset(tiles, tiles, oracle::random_flows(n, n, rng));
}

}  // namespace

TEST_SUITE("flow_model") {
  TEST_CASE("AU fixture loads as 8 x 8 with recomputed totals") {
    const FlowDataset au = testing::load_fixture("au");
    CHECK(au.origin_count() == 8);
    CHECK(au.destination_count() == 8);
    CHECK(au.same_regions());
    CHECK(au.totals_out().sum() == doctest::Approx(au.flows().sum()));
    for (Eigen::Index i = 0; i < 8; ++i) CHECK(au.totals_out()(i) == doctest::Approx(au.flows().row(i).sum()));
    for (const auto& r : au.origins()) CHECK(point_in_polygon(r.anchor, r.boundary));
  }

  TEST_CASE("loading is deterministic") {
    const FlowDataset a = testing::load_fixture("us");
    const FlowDataset b = testing::load_fixture("us");
    CHECK(a.flows() == b.flows());
    for (std::size_t i = 0; i < a.origins().size(); ++i) {
      CHECK(a.origins()[i].boundary == b.origins()[i].boundary);
      CHECK(a.origins()[i].anchor == b.origins()[i].anchor);
    }
  }

  TEST_CASE("all-zero flows are rejected") {
    CHECK_THROWS_AS(from_strings("origin,A\nA,0\n", testing::square_features({"A"})), ValidationError);
  }

  TEST_CASE("unmatched ids are named") {
    try {
      from_strings("origin,A,XX\nA,1,2\n", testing::square_features({"A"}));
      FAIL("expected IngestError");
    } catch (const IngestError& e) {
      CHECK(e.unmatched_ids() == std::vector<std::string>{"XX"});
      CHECK(std::string(e.what()).find("XX") != std::string::npos);
    }
  }

  TEST_CASE("negative flows and degenerate polygons") {
    CHECK_THROWS_AS(from_strings("origin,A,B\nA,1,-2\nB,0,1\n", testing::square_features({"A", "B"})),
                    ValidationError);
    const std::string flat =
        R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{"id":"A"},)"
        R"("geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[2,0],[0,0]]]}}]})";
    CHECK_THROWS_AS(from_strings("origin,A\nA,1\n", flat), GeometryError);
    CHECK_THROWS_AS(make_region("bow", "bow", {{0, 0}, {1, 1}, {1, 0}, {0, 1}}), GeometryError);
  }

  TEST_CASE("aggregate with no groups is the identity") {
    const FlowDataset d = two_squares((Eigen::MatrixXd(2, 2) << 1, 2, 3, 4).finished());
    const FlowDataset a = aggregate(d, {});
    CHECK(a.flows() == d.flows());
    CHECK(a.origins().size() == 2);
  }

  TEST_CASE("merging both regions sums all four entries") {
    const Eigen::MatrixXd f = (Eigen::MatrixXd(2, 2) << 1, 2, 3, 4).finished();
    const FlowDataset d = two_squares(f);
    const std::vector<RegionGroup> g{{"AB", {"A", "B"}}};
    const FlowDataset a = aggregate(d, g);
    REQUIRE(a.origin_count() == 1);
    CHECK(a.flows()(0, 0) == doctest::Approx(f.sum()));
    CHECK(a.flows() == oracle::brute_aggregate(f, {{0, 1}}));
    CHECK(std::abs(signed_area(a.origins()[0].boundary)) == doctest::Approx(2.0));
    CHECK(a.origins()[0].boundary.size() == 4);
  }

  TEST_CASE("US groups of 5 and 4 states leave 44 regions") {
    const FlowDataset us = testing::load_fixture("us");
    const auto groups = std::vector<RegionGroup>{{"PACIFIC", {"WA", "OR", "ID", "NV", "CA"}},
                                                 {"TRISTATE", {"NY", "PA", "NJ", "CT"}}};
    const FlowDataset a = aggregate(us, groups);
    std::set<std::string> grouped;
    for (const auto& g : groups) grouped.insert(g.member_ids.begin(), g.member_ids.end());
    int expected = static_cast<int>(groups.size());
    for (const auto& r : us.origins()) expected += grouped.count(r.id) ? 0 : 1;
    CHECK(expected == 44);
    CHECK(a.origin_count() == expected);
    CHECK(a.destination_count() == expected);
    CHECK(a.grand_total() == doctest::Approx(us.grand_total()));
  }

  TEST_CASE("group errors") {
    const FlowDataset us = testing::load_fixture("us");
    const std::vector<RegionGroup> apart{{"X", {"WA", "FL"}}};
    CHECK_THROWS_AS(aggregate(us, apart), ContiguityError);
    const std::vector<RegionGroup> overlap{{"X", {"WA", "OR"}}, {"Y", {"OR", "CA"}}};
    CHECK_THROWS_AS(aggregate(us, overlap), AggregationError);
    const std::vector<RegionGroup> unknown{{"X", {"WA", "ZZ"}}};
    CHECK_THROWS_AS(aggregate(us, unknown), AggregationError);
  }

  TEST_CASE("full range keeps everything") {
    const FlowDataset au = testing::load_fixture("au");
    const auto r = filter_by_range(au, 0.0, au.max_flow());
    CHECK(r.dataset.flows() == au.flows());
    CHECK(r.retained_origins.size() == 8);
    CHECK(r.retained_destinations.size() == 8);
  }

  TEST_CASE("range [6, 10] on [[5,0],[0,9]] keeps only the second region") {
    const Eigen::MatrixXd f = (Eigen::MatrixXd(2, 2) << 5, 0, 0, 9).finished();
    const auto r = filter_by_range(two_squares(f), 6, 10);
    // Enumerate surviving entries directly.
    std::vector<double> survivors;
    for (Eigen::Index i = 0; i < 2; ++i)
      for (Eigen::Index j = 0; j < 2; ++j)
        if (f(i, j) >= 6 && f(i, j) <= 10) survivors.push_back(f(i, j));
    REQUIRE(survivors == std::vector<double>{9});
    CHECK(r.retained_origins == std::vector<std::string>{"B"});
    CHECK(r.retained_destinations == std::vector<std::string>{"B"});
    REQUIRE(r.dataset.origin_count() == 1);
    CHECK(r.dataset.flows()(0, 0) == 9);
  }

  TEST_CASE("range above the maximum leaves an empty, legal result") {
    const FlowDataset au = testing::load_fixture("au");
    const auto r = filter_by_range(au, au.max_flow() + 1, au.max_flow() + 2);
    CHECK(r.retained_origins.empty());
    CHECK(r.retained_destinations.empty());
    CHECK(r.dataset.empty());
  }

  TEST_CASE("range guards") {
    const FlowDataset au = testing::load_fixture("au");
    CHECK_THROWS_AS(filter_by_range(au, 10, 5), RangeError);
    CHECK_THROWS_AS(filter_by_range(au, -1, 5), RangeError);
  }

  TEST_CASE("conservation under random aggregation and filtering") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 60; ++trial) {
      const FlowDataset d = random_tiles(9 + trial % 20, rng);
      std::vector<std::vector<int>> idx;
      const auto groups = oracle::random_groups(d, rng, idx);
      const FlowDataset a = aggregate(d, groups);
      CHECK(a.grand_total() == doctest::Approx(d.grand_total()));
      CHECK(a.totals_out().sum() == doctest::Approx(d.grand_total()));
      CHECK(a.totals_in().sum() == doctest::Approx(d.grand_total()));
      CHECK(a.flows().isApprox(oracle::brute_aggregate(d.flows(), idx)));

      const double lo = 5.0, hi = 40.0;
      const auto f = filter_by_range(d, lo, hi);
      const double kept = d.flows().unaryExpr([&](double v) { return v >= lo && v <= hi ? v : 0.0; }).sum();
      CHECK(f.dataset.grand_total() == doctest::Approx(kept));
      // Singleton groups after filtering change nothing.
      std::vector<RegionGroup> singles;
      for (const auto& r : f.dataset.origins()) singles.push_back({"S_" + r.id, {r.id}});
      if (!singles.empty()) {
        const FlowDataset s = aggregate(f.dataset, singles);
        CHECK(s.flows() == f.dataset.flows());
      }
    }
  }
}
