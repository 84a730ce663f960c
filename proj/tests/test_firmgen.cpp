#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <set>

#include "sclab/firmgen.hpp"

using namespace sclab;

TEST_CASE("assign_firm_groups: group layout") {
  SUBCASE("default config: 5 groups of 30 for T=4, n_consec=2") {
    FirmGenConfig c;
    const auto firms = assign_firm_groups(c, 4);
    // The group list runs Group 0 .. Group T-n_consec+2, i.e. 5 groups;
    // 4 groups could not cover the final tier.
    REQUIRE(firms.size() == 150);
    CHECK(firms.front().group == 0);
    CHECK(firms.back().group == 4);
    for (const Firm& f : firms) {
      CHECK(f.x >= 0.0);
      CHECK(f.x < 1.0);
    }
  }
  SUBCASE("one group covering all tiers") {
    FirmGenConfig c;
    c.n_group = 1;
    c.n_consec = 6;  // T+2
    const auto firms = assign_firm_groups(c, 4);
    REQUIRE(firms.size() == 1);
    CHECK(group_covers_tier(c, 0, 0));
    CHECK(group_covers_tier(c, 0, 5));
  }
  SUBCASE("n_consec=1: group g covers tier g only") {
    FirmGenConfig c;
    c.n_group = 2;
    c.n_consec = 1;
    const auto firms = assign_firm_groups(c, 1);
    REQUIRE(firms.size() == 6);  // 3 groups of 2
    CHECK(group_covers_tier(c, 1, 1));
    CHECK(!group_covers_tier(c, 1, 0));
    CHECK(!group_covers_tier(c, 1, 2));
  }
}

TEST_CASE("assign_suppliers: viability, clamping, proximity") {
  ProdGenConfig pc;
  pc.seed = 21;
  const auto graph = build_production_graph(pc);
  FirmGenConfig fc;
  fc.seed = 21;
  const auto firms = assign_firm_groups(fc, pc.T);
  Rng rng(derive_seed(fc.seed, "firmgen.suppliers"));
  const auto supply = assign_suppliers(graph, firms, fc, rng);

  for (const Product& p : graph.products) {
    const auto& sup = supply[p.id];
    REQUIRE(!sup.empty());
    CHECK(sup.size() >= 4);
    CHECK(sup.size() <= 8);
    for (const FirmId f : sup) CHECK(group_covers_tier(fc, firms[f].group, p.tier));
    // Proximity: every chosen supplier is at least as close as every viable
    // non-chosen firm (modulo the id tie-break).
    double worst = 0.0;
    for (const FirmId f : sup) worst = std::max(worst, dist2(p.x, p.y, firms[f].x, firms[f].y));
    for (const Firm& f : firms) {
      if (!group_covers_tier(fc, f.group, p.tier)) continue;
      if (std::find(sup.begin(), sup.end(), f.id) != sup.end()) continue;
      CHECK(dist2(p.x, p.y, f.x, f.y) >= worst);
    }
  }
}

TEST_CASE("assign_suppliers: clamp when few viable firms") {
  ProdGenConfig pc;
  pc.n_exog = 1;
  pc.n_consumer = 1;
  pc.n_tier = 1;
  pc.T = 1;
  pc.parts_range = {1, 1};
  const auto graph = build_production_graph(pc);
  FirmGenConfig fc;
  fc.n_group = 2;  // 2 viable per tier at most... groups: T-n_consec+3 = 2 groups of 2
  Rng rng(0);
  const auto firms = assign_firm_groups(fc, pc.T);
  const auto supply = assign_suppliers(graph, firms, fc, rng);
  for (const auto& sup : supply) {
    CHECK(!sup.empty());
    CHECK(sup.size() <= 4);  // can't exceed viable count (2 groups x 2)
  }
}

TEST_CASE("assign_default_suppliers: completeness and membership") {
  ProdGenConfig pc;
  pc.seed = 4;
  const auto graph = build_production_graph(pc);
  FirmGenConfig fc;
  fc.seed = 4;
  const auto u = build_firm_universe(graph, fc);
  const auto inputs = firm_input_products(u.supply_map, graph, u.firms.size());
  for (FirmId b = 0; b < u.firms.size(); ++b) {
    for (const ProductId p : inputs[b]) {
      const auto it = u.default_suppliers.find({b, p});
      REQUIRE(it != u.default_suppliers.end());
      const auto& sup = u.supply_map[p];
      CHECK(std::find(sup.begin(), sup.end(), it->second) != sup.end());
      CHECK(it->second != b);  // no self-supply
    }
  }
}

TEST_CASE("assign_default_suppliers: preferential attachment weights") {
  // Product 1 (tier 1) needs part 0 (tier 0, two suppliers 0 and 1); firms
  // 2..N-1 each buy it. With +1 smoothing, P(first pick = 0) = 1/2 and the
  // winner of early draws accumulates weight, so the more popular supplier
  // ends up with more buyers on average (rich get richer). We check the exact
  // two-step probability by enumeration over many seeds.
  SupplyMap supply(2);
  supply[0] = {0, 1};
  supply[1] = {2, 3};
  ProductionGraph g;
  g.products = {{0, 0, 0, 0}, {1, 1, 0, 0}};
  g.parts = {{}, {{0, 1}}};

  int both_same = 0;
  const int trials = 40000;
  for (int s = 0; s < trials; ++s) {
    Rng rng(derive_seed(s, "pa-test"));
    const auto def = assign_default_suppliers(supply, g, rng, 4);
    // buyers of part 0 are firms 2 and 3 (they supply product 1)
    if (def.at({2, 0}) == def.at({3, 0})) ++both_same;
  }
  // P(same) = P(second matches first) = 2/3 under weights (2,1).
  const double frac = static_cast<double>(both_same) / trials;
  CHECK(frac > 0.66 - 0.02);
  CHECK(frac < 0.66 + 0.02);
}

TEST_CASE("determinism: same seed, identical universe") {
  ProdGenConfig pc;
  pc.seed = 99;
  const auto graph = build_production_graph(pc);
  FirmGenConfig fc;
  fc.seed = 99;
  const auto a = build_firm_universe(graph, fc);
  const auto b = build_firm_universe(graph, fc);
  CHECK(a.firms == b.firms);
  CHECK(a.supply_map == b.supply_map);
  CHECK(a.default_suppliers == b.default_suppliers);
}

TEST_CASE("serialize/parse firm universe round-trip") {
  ProdGenConfig pc;
  pc.seed = 31;
  const auto graph = build_production_graph(pc);
  FirmGenConfig fc;
  fc.seed = 31;
  const auto u = build_firm_universe(graph, fc);
  serialize_firms(u, "test_firms.txt");
  const auto back = parse_firms("test_firms.txt");
  CHECK(back.firms == u.firms);
  CHECK(back.supply_map == u.supply_map);
  CHECK(back.default_suppliers == u.default_suppliers);
  std::remove("test_firms.txt");
}
