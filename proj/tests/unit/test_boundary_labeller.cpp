#include "maptrix/boundary_labeller.hpp"
#include "maptrix/errors.hpp"

#include "../support/oracles.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <numeric>
#include <random>

using namespace maptrix;

namespace {

std::vector<Port> column_ports(int n, double x, double y0, double spacing) {
  std::vector<Port> ports;
  for (int i = 0; i < n; ++i) ports.push_back(Port{i, Point(x, y0 + i * spacing), EdgeSide::origin_edge});
  return ports;
}

std::vector<LeaderRoute> route_all(std::span<const Point> sites, std::span<const Port> ports,
                                   const LabellingConfig& cfg) {
  const auto a = assign_ports(sites, ports, cfg);
  std::vector<LeaderRoute> routes;
  for (std::size_t i = 0; i < sites.size(); ++i) routes.push_back(route_leader(sites[i], ports[a.port_of_site[i]], cfg));
  return routes;
}

}  // namespace

TEST_SUITE("boundary_labeller") {
  TEST_CASE("one site, one port") {
    const std::vector<Point> sites{{0, 0}};
    const auto ports = column_ports(1, 50, 0, 10);
    const auto a = assign_ports(sites, ports, {1.0, 10.0, 40.0});
    CHECK(a.port_of_site == std::vector<std::size_t>{0});
  }

  TEST_CASE("sorted, well separated sites keep the identity") {
    const std::vector<Point> sites{{0, 0}, {0, 30}, {0, 60}};
    const auto ports = column_ports(3, 200, 0, 30);
    const auto a = assign_ports(sites, ports, {1.0, 30.0, 150.0});
    CHECK(a.port_of_site == std::vector<std::size_t>{0, 1, 2});
    CHECK(a.repair_swaps == 0);
  }

  TEST_CASE("identical sites are rejected") {
    const std::vector<Point> sites{{1, 1}, {1, 1}};
    CHECK_THROWS_AS(assign_ports(sites, column_ports(2, 50, 0, 10), {1.0, 10.0, 40.0}), DegenerateSiteError);
  }

  TEST_CASE("AU anchors route crossing-free") {
    const FlowDataset au = testing::load_fixture("au");
    std::vector<Point> sites;
    for (const auto& r : au.origins()) sites.push_back(r.anchor);
    const auto ports = column_ports(8, 900, 20, 45);
    const LabellingConfig cfg{1.0, 45.0, 880.0};
    const auto routes = route_all(sites, ports, cfg);
    CHECK(oracle::crossings(routes).empty());
    CHECK(verify_crossing_free(routes).empty());
  }

  TEST_CASE("horizontal leader for a site level with its port") {
    const LeaderRoute r = route_leader({0, 0}, Port{0, {10, 0}}, {1.0, 10.0, 10.0});
    CHECK(r.bend == Point(0, 0));
    CHECK((r.bend - r.site).norm() == 0.0);
    CHECK(r.gradient_sign == GradientSign::up);
  }

  TEST_CASE("bend sits |dy|/k right of the site") {
    const LeaderRoute r = route_leader({0, 0}, Port{0, {10, 4}}, {1.0, 10.0, 10.0});
    CHECK(r.bend.x() == doctest::Approx(4.0));
    CHECK(r.bend.y() == doctest::Approx(4.0));
    const double slope = (r.bend.y() - r.site.y()) / (r.bend.x() - r.site.x());
    CHECK(slope == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.horizontal().a.y() == r.horizontal().b.y());
  }

  TEST_CASE("too steep a leader reports the gradient that fits") {
    try {
      route_leader({0, 0}, Port{0, {10, 20}}, {1.0, 10.0, 10.0});
      FAIL("expected SteepLeaderError");
    } catch (const SteepLeaderError& e) {
      CHECK(e.min_k() == doctest::Approx(20.0 / 10.0));
    }
  }

  TEST_CASE("crossing verification") {
    const LeaderRoute a = construct_route({0, 0}, Port{0, {10, 0}}, 1.0);
    const LeaderRoute b = construct_route({0, 5}, Port{1, {10, 5}}, 1.0);
    CHECK(verify_crossing_free(std::vector<LeaderRoute>{a, b}).empty());
    CHECK(verify_crossing_free(std::vector<LeaderRoute>{a}).empty());
    // (0,0)->(5,5)->(10,5) against (0,4)->(1,5)... made to cross: (0,4) down to y=0.
    const LeaderRoute up = construct_route({0, 0}, Port{0, {10, 5}}, 1.0);
    const LeaderRoute down = construct_route({0, 4}, Port{1, {10, 0}}, 1.0);
    const std::vector<LeaderRoute> pair{up, down};
    const auto found = verify_crossing_free(pair);
    CHECK(found.size() == 1);
    CHECK(found == oracle::crossings(pair));
  }

  TEST_CASE("band partition") {
    const auto up1 = construct_route({0, 0}, Port{0, {50, 10}}, 1.0);
    const auto up2 = construct_route({0, 10}, Port{1, {50, 20}}, 1.0);
    const auto down = construct_route({0, 40}, Port{2, {50, 30}}, 1.0);
    const std::vector<LeaderRoute> ups{up1, up2};
    const auto one = partition_bands(ups);
    CHECK(one.bands.size() == 1);
    CHECK(one.separators.empty());
    const std::vector<LeaderRoute> mixed{up1, up2, down};
    const auto two = partition_bands(mixed);
    CHECK(two.bands.size() == 2);
    CHECK(two.separators.size() == 1);
    // Facing extremes are site y 10 (upper band) and 40 (lower band).
    CHECK(two.separators[0] == doctest::Approx(0.5 * (10 + 40)));

    const auto a = construct_route({0, 10}, Port{0, {50, 12}}, 1.0);
    const auto b = construct_route({0, 20}, Port{1, {50, 14}}, 1.0);
    const auto sep = partition_bands(std::vector<LeaderRoute>{a, b});
    REQUIRE(sep.separators.size() == 1);
    CHECK(sep.separators[0] == doctest::Approx(15.0));
  }

  TEST_CASE("random site sets route crossing-free") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 300.0);
    int total = 0;
    for (int trial = 0; trial < 500; ++trial) {
      const int n = 2 + trial % 50;
      std::vector<Point> sites;
      for (int i = 0; i < n; ++i) sites.emplace_back(u(rng), u(rng));
      const double spacing = 300.0 / n;
      const auto ports = column_ports(n, 800, spacing / 2, spacing);
      const LabellingConfig cfg{1.0, spacing, 700.0};
      const auto a = assign_ports(sites, ports, cfg);
      std::vector<LeaderRoute> routes;
      for (int i = 0; i < n; ++i) routes.push_back(route_leader(sites[i], ports[a.port_of_site[i]], cfg));
      const auto found = oracle::crossings(routes);
      CHECK(found.empty());
      CHECK(a.residual_crossings == 0);
      total += found.empty();

      // Within a band, port order follows diagonal order wherever extents overlap,
      // and site y order elsewhere.
      for (const auto& band : partition_bands(routes).bands) {
        for (std::size_t p = 0; p < band.routes.size(); ++p) {
          for (std::size_t q = p + 1; q < band.routes.size(); ++q) {
            const auto& lo = routes[band.routes[p]];
            const auto& hi = routes[band.routes[q]];
            const double s = band.sign == GradientSign::up ? -1.0 : 1.0;
            const double beta_lo = lo.site.y() + s * lo.site.x();
            const double beta_hi = hi.site.y() + s * hi.site.x();
            const bool disjoint = band.sign == GradientSign::up ? hi.site.y() > lo.port.position.y()
                                                                : lo.site.y() < hi.port.position.y();
            CHECK((disjoint ? lo.site.y() <= hi.site.y() : beta_lo <= beta_hi));
          }
        }
      }
    }
    CHECK(total == 500);
  }

  TEST_CASE("emitted bends reproduce the gradient") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (double k : {0.5, 1.0, 2.0}) {
      for (int t = 0; t < 200; ++t) {
        const Point site(u(rng), u(rng));
        const LeaderRoute r = route_leader(site, Port{0, {500, u(rng)}}, {k, 10.0, 400.0});
        if (r.bend.x() == site.x()) continue;
        const double slope = (r.bend.y() - site.y()) / (r.bend.x() - site.x());
        CHECK(std::abs(std::abs(slope) - k) <= 1e-9);
      }
    }
  }
}
