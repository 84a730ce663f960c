#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sclab/core.hpp"
#include "sclab/firmgen.hpp"

namespace sclab {

// Undirected simple graph over firm ids; isolated ids (firms that never
// transact) carry no edges and are skipped by the statistics.
struct FirmGraph {
  std::vector<std::vector<std::uint32_t>> adj;  // sorted, deduplicated

  std::size_t n() const { return adj.size(); }
  std::size_t edge_count() const;
  std::size_t degree(std::uint32_t v) const { return adj[v].size(); }
};

// Edge {i,j} iff some transaction links supplier i and buyer j (consumer
// sentinel excluded); direction and multiplicity collapsed.
FirmGraph build_firm_graph(const Dataset& dataset);

// The static "is a supplier of" relation: edge {s,b} iff s is b's default
// supplier for some input product. This is the graph whose degrees carry the
// preferential-attachment skew; realized transactions wash it out via the
// occasional non-default orders.
FirmGraph build_supplier_graph(const FirmUniverse& universe);

// Q = (1/2E) sum_ij (A_ij - k_i k_j / 2E) [c_i == c_j]. Throws on 0 edges.
double modularity(const FirmGraph& graph, const std::vector<int>& partition);

// Seed-deterministic Louvain; returns a local optimum of Q (no single-node
// move improves it). Isolated nodes get singleton communities.
std::vector<int> louvain_partition(const FirmGraph& graph, std::uint64_t seed);

std::vector<double> clustering_coefficients(const FirmGraph& graph);

// Mean over non-isolated nodes (degree >= 1); k < 2 contributes 0.
double mean_clustering(const FirmGraph& graph);

// Pearson r over degree pairs of edge endpoints, both orientations. Throws
// when the degree variance is zero.
double degree_assortativity(const FirmGraph& graph);

struct DegreeSummary {
  std::map<std::size_t, std::size_t> histogram;  // degree -> node count (degree >= 1)
  std::size_t max_degree = 0;
  double median_degree = 0.0;
  double tail_exponent = 0.0;  // log-log CCDF slope magnitude over k >= k_min
  std::size_t k_min = 1;
};

DegreeSummary degree_distribution_summary(const FirmGraph& graph, std::size_t k_min = 1);

void write_stats_report(const FirmGraph& graph, std::uint64_t seed, const std::string& path);

}  // namespace sclab
