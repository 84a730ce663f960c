#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sclab/netstats.hpp"
#include "sclab/rng.hpp"

using namespace sclab;

namespace {

FirmGraph graph_from_edges(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  FirmGraph g;
  g.adj.assign(n, {});
  for (const auto& [a, b] : edges) {
    g.adj[a].push_back(b);
    g.adj[b].push_back(a);
  }
  for (auto& nb : g.adj) std::sort(nb.begin(), nb.end());
  return g;
}

// Naive double-sum evaluation of the Q formula over all ordered pairs.
double modularity_oracle(const FirmGraph& g, const std::vector<int>& part) {
  const double two_e = 2.0 * static_cast<double>(g.edge_count());
  double q = 0.0;
  for (std::uint32_t i = 0; i < g.n(); ++i)
    for (std::uint32_t j = 0; j < g.n(); ++j) {
      if (part[i] != part[j]) continue;
      const double a_ij =
          std::binary_search(g.adj[i].begin(), g.adj[i].end(), j) ? 1.0 : 0.0;
      q += a_ij - static_cast<double>(g.degree(i)) * static_cast<double>(g.degree(j)) / two_e;
    }
  return q / two_e;
}

// Exhaustive maximum of Q via restricted-growth-string partition enumeration.
double best_partition_q(const FirmGraph& g) {
  const std::size_t n = g.n();
  std::vector<int> rgs(n, 0);
  double best = -1.0;
  while (true) {
    best = std::max(best, modularity(g, rgs));
    // advance the restricted growth string
    std::size_t i = n;
    while (i-- > 1) {
      int max_prefix = 0;
      for (std::size_t j = 0; j < i; ++j) max_prefix = std::max(max_prefix, rgs[j]);
      if (rgs[i] <= max_prefix) {
        ++rgs[i];
        for (std::size_t j = i + 1; j < n; ++j) rgs[j] = 0;
        break;
      }
      if (i == 1) return best;
    }
    if (n == 1) return best;
  }
}

}  // namespace

TEST_CASE("firm graph construction") {
  Dataset d;
  d.n_firms = 4;
  d.n_products = 1;
  d.transactions = {{0, 0, 1, 0, 1.0}, {1, 1, 0, 0, 1.0}, {2, 2, kConsumer, 0, 1.0}};
  const auto g = build_firm_graph(d);
  CHECK(g.n() == 4);
  CHECK(g.edge_count() == 1);  // both directions collapse to one edge
  CHECK(g.degree(0) == 1);
  CHECK(g.degree(1) == 1);
  CHECK(g.degree(2) == 0);  // consumer sales add no edges
  CHECK(g.degree(3) == 0);

  Dataset empty;
  CHECK_THROWS_AS(build_firm_graph(empty), ValidationError);
}

TEST_CASE("modularity hand examples") {
  // Two triangles joined by one edge.
  const auto g = graph_from_edges(6, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}, {0, 3}});
  const std::vector<int> triangles = {0, 0, 0, 1, 1, 1};
  CHECK(modularity(g, triangles) == doctest::Approx(2.0 * (3.0 / 7.0 - 0.25)));
  CHECK(modularity(g, triangles) == doctest::Approx(0.357142857));

  const std::vector<int> one(6, 0);
  CHECK(modularity(g, one) == doctest::Approx(0.0));

  FirmGraph no_edges;
  no_edges.adj.assign(3, {});
  CHECK_THROWS_AS(modularity(no_edges, std::vector<int>{0, 1, 2}), ValidationError);
}

TEST_CASE("modularity matches a brute-force oracle on random graphs") {
  Rng rng(777);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::uint32_t a = 0; a < 8; ++a)
      for (std::uint32_t b = a + 1; b < 8; ++b)
        if (rng.bernoulli(0.4)) edges.push_back({a, b});
    if (edges.empty()) continue;
    const auto g = graph_from_edges(8, edges);
    std::vector<int> part(8);
    for (int& c : part) c = static_cast<int>(rng.index(3));
    CHECK(modularity(g, part) == doctest::Approx(modularity_oracle(g, part)));

    // All-singletons partition never beats 0.
    std::vector<int> singles(8);
    for (int k = 0; k < 8; ++k) singles[k] = k;
    CHECK(modularity(g, singles) <= 1e-12);
  }
}

TEST_CASE("louvain recovers two disconnected 4-cliques") {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::uint32_t a = 0; a < 4; ++a)
    for (std::uint32_t b = a + 1; b < 4; ++b) {
      edges.push_back({a, b});
      edges.push_back({a + 4, b + 4});
    }
  const auto g = graph_from_edges(8, edges);
  const auto part = louvain_partition(g, 1);
  // Each clique shares one label and the labels differ.
  for (int k = 1; k < 4; ++k) {
    CHECK(part[k] == part[0]);
    CHECK(part[4 + k] == part[4]);
  }
  CHECK(part[0] != part[4]);
  // The clique split is the global optimum found by exhaustive search.
  CHECK(modularity(g, part) == doctest::Approx(best_partition_q(g)));
  CHECK(modularity(g, part) == doctest::Approx(0.5));
}

TEST_CASE("louvain is deterministic and locally optimal") {
  Rng edge_rng(31);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::uint32_t a = 0; a < 30; ++a)
    for (std::uint32_t b = a + 1; b < 30; ++b)
      if (edge_rng.bernoulli(a / 10 == b / 10 ? 0.6 : 0.05)) edges.push_back({a, b});
  const auto g = graph_from_edges(30, edges);

  const auto p1 = louvain_partition(g, 5);
  const auto p2 = louvain_partition(g, 5);
  CHECK(p1 == p2);

  // No single-node relabeling to a neighboring community improves Q.
  const double q = modularity(g, p1);
  int max_label = 0;
  for (const int c : p1) max_label = std::max(max_label, c);
  for (std::uint32_t v = 0; v < g.n(); ++v) {
    auto moved = p1;
    for (int c = 0; c <= max_label + 1; ++c) {
      moved[v] = c;
      CHECK(modularity(g, moved) <= q + 1e-9);
    }
    moved[v] = p1[v];
  }
}

TEST_CASE("clustering coefficients") {
  const auto triangle = graph_from_edges(3, {{0, 1}, {1, 2}, {2, 0}});
  for (const double c : clustering_coefficients(triangle)) CHECK(c == doctest::Approx(1.0));
  CHECK(mean_clustering(triangle) == doctest::Approx(1.0));

  const auto star = graph_from_edges(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  const auto cc = clustering_coefficients(star);
  for (const double c : cc) CHECK(c == 0.0);
  CHECK(mean_clustering(star) == 0.0);

  // Coefficients stay within [0, 1] on random graphs; isolated nodes are
  // excluded from the mean.
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::uint32_t a = 0; a < 12; ++a)
      for (std::uint32_t b = a + 1; b < 12; ++b)
        if (rng.bernoulli(0.3)) edges.push_back({a, b});
    if (edges.empty()) continue;
    const auto g = graph_from_edges(14, edges);  // nodes 12, 13 isolated
    for (const double c : clustering_coefficients(g)) {
      CHECK(c >= 0.0);
      CHECK(c <= 1.0);
    }
    CHECK(mean_clustering(g) >= 0.0);
    CHECK(mean_clustering(g) <= 1.0);
  }
}

TEST_CASE("degree assortativity") {
  // Path 0-1-2-3: degree pairs (1,2),(2,1),(2,2),(2,2),(2,1),(1,2).
  const auto path = graph_from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
  CHECK(degree_assortativity(path) == doctest::Approx(-0.5));

  // K4 is 3-regular: zero degree variance.
  const auto k4 = graph_from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  CHECK_THROWS_AS(degree_assortativity(k4), ValidationError);

  // Star is maximally disassortative.
  const auto star = graph_from_edges(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  CHECK(degree_assortativity(star) == doctest::Approx(-1.0));
}

TEST_CASE("degree summary on a regular graph") {
  const auto ring = graph_from_edges(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}});
  const auto s = degree_distribution_summary(ring);
  CHECK(s.histogram.size() == 1);
  CHECK(s.histogram.at(2) == 6);
  CHECK(s.max_degree == 2);
  CHECK(s.median_degree == doctest::Approx(2.0));
}

TEST_CASE("tail fit recovers a known power-law exponent") {
  // Sample degrees from a discretized Pareto with exponent 2.5 and attach
  // them as a star forest so the histogram matches the sample exactly.
  Rng rng(123);
  std::map<std::size_t, std::size_t> hist;
  const double gamma = 2.5;
  const std::size_t k_min = 3;
  for (int i = 0; i < 30000; ++i) {
    const double u = rng.uniform();
    const double k = static_cast<double>(k_min) * std::pow(1.0 - u, -1.0 / (gamma - 1.0));
    hist[static_cast<std::size_t>(std::min(k, 1e5))] += 1;
  }
  // Realize the sample as disjoint stars: each draw becomes a hub of that
  // degree. Leaves sit at degree 1, below k_min, so the regression over
  // k >= k_min sees only the hubs (the leaves only shift the CCDF by a
  // constant factor, which leaves the log-log slope unchanged).
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::uint32_t next = 0;
  for (const auto& [k, cnt] : hist)
    for (std::size_t c = 0; c < cnt; ++c) {
      const std::uint32_t hub = next++;
      for (std::size_t leaf = 0; leaf < k; ++leaf) edges.push_back({hub, next++});
    }
  FirmGraph g;
  g.adj.assign(next, {});
  for (const auto& [a, b] : edges) {
    g.adj[a].push_back(b);
    g.adj[b].push_back(a);
  }
  for (auto& nb : g.adj) std::sort(nb.begin(), nb.end());

  const auto s = degree_distribution_summary(g, k_min);
  CHECK(s.tail_exponent == doctest::Approx(gamma).epsilon(0.12));
}

TEST_CASE("stats report is written and parseable") {
  const auto g = graph_from_edges(6, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}, {0, 3}});
  const std::string path = "test_netstats_report.txt";
  write_stats_report(g, 1, path);
  std::ifstream in(path);
  std::string key;
  std::size_t nodes = 0, edges = 0;
  in >> key >> nodes;
  CHECK(key == "nodes");
  CHECK(nodes == 6);
  in >> key >> edges;
  CHECK(key == "edges");
  CHECK(edges == 7);
  double q = 0.0;
  in >> key >> q;
  CHECK(key == "modularity");
  CHECK(q > 0.0);
  std::remove(path.c_str());
}
