#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <map>

#include "sclab/prodgen.hpp"

using namespace sclab;

TEST_CASE("assign_tiers: contiguous block layout") {
  SUBCASE("default config (5,5,10,4)") {
    ProdGenConfig c;
    const auto tiers = assign_tiers(c);
    REQUIRE(tiers.size() == 50);
    for (ProductId p = 0; p <= 4; ++p) CHECK(tiers[p].second == 0);
    for (ProductId p = 45; p <= 49; ++p) CHECK(tiers[p].second == 5);
    CHECK(tiers[5].second == 1);
    CHECK(tiers[44].second == 4);
  }
  SUBCASE("T=0 degenerate layout") {
    ProdGenConfig c;
    c.n_exog = 1;
    c.n_consumer = 1;
    c.n_tier = 1;
    c.T = 0;
    const auto tiers = assign_tiers(c);
    REQUIRE(tiers.size() == 2);
    CHECK(tiers[0].second == 0);
    CHECK(tiers[1].second == 1);
  }
  SUBCASE("(2,3,4,2): tier 2 = ids 6..9") {
    ProdGenConfig c;
    c.n_exog = 2;
    c.n_consumer = 3;
    c.n_tier = 4;
    c.T = 2;
    const auto tiers = assign_tiers(c);
    REQUIRE(tiers.size() == 13);
    for (ProductId p = 6; p <= 9; ++p) CHECK(tiers[p].second == 2);
  }
}

TEST_CASE("assign_parts: deterministic closest with hand-checked distances") {
  // Product 3 at (0.5,0.5) in tier 1; tier 0 at (0.5,0.6), (0.9,0.9), (0.5,0.45).
  std::vector<Product> products = {
      {0, 0, 0.5, 0.6}, {1, 0, 0.9, 0.9}, {2, 0, 0.5, 0.45}, {3, 1, 0.5, 0.5}};
  ProdGenConfig c;
  c.parts_range = {2, 2};
  c.units_range = {1, 1};
  Rng rng(0);
  const auto parts = assign_parts(products, 1, c, rng);
  REQUIRE(parts[3].size() == 2);
  // Nearest two, nearest first: id 2 (d=0.05), then id 0 (d=0.1).
  CHECK(parts[3][0].part == 2);
  CHECK(parts[3][1].part == 0);
}

TEST_CASE("assign_parts: forced selection when previous tier is small") {
  std::vector<Product> products = {{0, 0, 0.1, 0.1}, {1, 0, 0.2, 0.2}, {2, 1, 0.9, 0.9}};
  ProdGenConfig c;
  c.parts_range = {2, 4};  // k may exceed the 2 candidates; must clamp
  Rng rng(0);
  const auto parts = assign_parts(products, 1, c, rng);
  REQUIRE(parts[2].size() == 2);
}

TEST_CASE("assign_parts: part counts cover the range roughly uniformly") {
  // Large previous tier so k is never clamped.
  std::vector<Product> products;
  Rng pos_rng(9);
  for (ProductId i = 0; i < 50; ++i) products.push_back({i, 0, pos_rng.uniform(), pos_rng.uniform()});
  for (ProductId i = 50; i < 3050; ++i)
    products.push_back({i, 1, pos_rng.uniform(), pos_rng.uniform()});
  ProdGenConfig c;
  Rng rng(5);
  const auto parts = assign_parts(products, 1, c, rng);
  std::map<std::size_t, int> hist;
  for (ProductId i = 50; i < 3050; ++i) hist[parts[i].size()]++;
  REQUIRE(hist.size() == 3);  // {2,3,4}
  for (const auto& [k, n] : hist) {
    CHECK(n > 1000 - 150);  // 3 sigma ~ 78 for p=1/3, n=3000
    CHECK(n < 1000 + 150);
  }
}

TEST_CASE("build_production_graph: invariants on the default config") {
  ProdGenConfig c;
  c.seed = 11;
  const auto g = build_production_graph(c);
  REQUIRE(g.m() == 50);
  CHECK(g.n_tiers() == 6);
  for (const Product& p : g.products) {
    CHECK(p.x >= 0.0);
    CHECK(p.x < 1.0);
    if (p.tier == 0) {
      CHECK(g.parts[p.id].empty());
    } else {
      CHECK(!g.parts[p.id].empty());
      for (const PartSpec& ps : g.parts[p.id]) {
        CHECK(g.tier_of(ps.part) == p.tier - 1);
        CHECK(ps.units >= 1);
        CHECK(ps.units <= 4);
      }
    }
  }
}

TEST_CASE("build_production_graph: same seed, identical graphs") {
  ProdGenConfig c;
  c.seed = 123;
  CHECK(build_production_graph(c) == build_production_graph(c));
}

TEST_CASE("build_production_graph: stochastic gamma mode still layered") {
  ProdGenConfig c;
  c.deterministic_closest = false;
  c.gamma = -2.0;
  c.seed = 3;
  const auto g = build_production_graph(c);
  for (const Product& p : g.products)
    for (const PartSpec& ps : g.parts[p.id]) CHECK(g.tier_of(ps.part) == p.tier - 1);
}

TEST_CASE("serialize/parse production graph round-trip") {
  ProdGenConfig c;
  c.seed = 77;
  const auto g = build_production_graph(c);
  serialize_production_graph(g, "test_prodgraph.txt");
  const auto back = parse_production_graph("test_prodgraph.txt");
  CHECK(back == g);
  std::remove("test_prodgraph.txt");
}

TEST_CASE("config validation") {
  ProdGenConfig c;
  c.parts_range = {3, 2};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  ProdGenConfig c2;
  c2.units_range = {0, 4};
  CHECK_THROWS_AS(c2.validate(), ConfigError);
}
