#include "sclab/netstats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "sclab/rng.hpp"

namespace sclab {

std::size_t FirmGraph::edge_count() const {
  std::size_t deg_sum = 0;
  for (const auto& nb : adj) deg_sum += nb.size();
  return deg_sum / 2;
}

FirmGraph build_firm_graph(const Dataset& dataset) {
  if (dataset.transactions.empty()) throw ValidationError("cannot build graph from empty dataset");
  std::set<std::pair<FirmId, FirmId>> edges;
  FirmId max_id = 0;
  for (const Transaction& x : dataset.transactions) {
    max_id = std::max(max_id, x.supplier);
    if (x.buyer == kConsumer) continue;
    max_id = std::max(max_id, x.buyer);
    const FirmId a = std::min(x.supplier, x.buyer);
    const FirmId b = std::max(x.supplier, x.buyer);
    edges.insert({a, b});
  }
  FirmGraph g;
  g.adj.assign(std::max<std::size_t>(dataset.n_firms, max_id + 1), {});
  for (const auto& [a, b] : edges) {
    g.adj[a].push_back(b);
    g.adj[b].push_back(a);
  }
  for (auto& nb : g.adj) std::sort(nb.begin(), nb.end());
  return g;
}

FirmGraph build_supplier_graph(const FirmUniverse& universe) {
  if (universe.default_suppliers.empty())
    throw ValidationError("firm universe has no supplier relations");
  std::set<std::pair<FirmId, FirmId>> edges;
  for (const auto& [key, s] : universe.default_suppliers) {
    const FirmId b = key.first;
    if (s == b) continue;
    edges.insert({std::min(s, b), std::max(s, b)});
  }
  FirmGraph g;
  g.adj.assign(universe.firms.size(), {});
  for (const auto& [a, b] : edges) {
    g.adj[a].push_back(b);
    g.adj[b].push_back(a);
  }
  for (auto& nb : g.adj) std::sort(nb.begin(), nb.end());
  return g;
}

double modularity(const FirmGraph& graph, const std::vector<int>& partition) {
  const double two_e = 2.0 * static_cast<double>(graph.edge_count());
  if (two_e == 0.0) throw ValidationError("modularity undefined on a graph with no edges");
  if (partition.size() != graph.n()) throw ValidationError("partition size mismatch");

  // Q = sum_c [ e_c / E2 - (deg_c / E2)^2 ] with E2 = 2E, e_c = 2x internal edges.
  std::map<int, double> internal, total;
  for (std::uint32_t v = 0; v < graph.n(); ++v) {
    total[partition[v]] += static_cast<double>(graph.degree(v));
    for (const std::uint32_t u : graph.adj[v])
      if (partition[u] == partition[v]) internal[partition[v]] += 1.0;
  }
  double q = 0.0;
  for (const auto& [c, tot] : total) {
    const double in = internal.count(c) ? internal.at(c) : 0.0;
    q += in / two_e - (tot / two_e) * (tot / two_e);
  }
  return q;
}

namespace {

// Weighted graph used by the aggregation phases of Louvain.
struct WGraph {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;  // no self entries
  std::vector<double> self;                                        // self-loop weight (x2 counted)
  double total_weight = 0.0;                                       // 2m

  std::size_t n() const { return adj.size(); }
  double strength(std::uint32_t v) const {
    double s = self[v];
    for (const auto& [u, w] : adj[v]) s += w;
    return s;
  }
};

// One level of local moving; returns the node->community labels (compacted).
std::vector<int> local_move(const WGraph& g, Rng& rng) {
  const std::size_t n = g.n();
  std::vector<int> comm(n);
  std::iota(comm.begin(), comm.end(), 0);
  std::vector<double> strength(n), comm_tot(n);
  for (std::uint32_t v = 0; v < n; ++v) comm_tot[v] = strength[v] = g.strength(v);

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

  const double two_m = g.total_weight;
  bool moved = true;
  while (moved) {
    moved = false;
    for (const std::uint32_t v : order) {
      std::map<int, double> links;  // community -> weight from v
      for (const auto& [u, w] : g.adj[v]) links[comm[u]] += w;
      const int old_c = comm[v];
      comm_tot[old_c] -= strength[v];
      const double base = links.count(old_c) ? links[old_c] : 0.0;
      const double base_gain = base - comm_tot[old_c] * strength[v] / two_m;
      int best_c = old_c;
      double best_gain = base_gain;
      for (const auto& [c, w] : links) {
        if (c == old_c) continue;
        const double gain = w - comm_tot[c] * strength[v] / two_m;
        if (gain > best_gain + 1e-12 || (gain > best_gain - 1e-12 && c < best_c)) {
          // Strict improvement, or tie resolved toward the lower label for
          // determinism (a tie with the current community keeps the node).
          if (gain > best_gain + 1e-12 || best_c != old_c) {
            best_gain = gain;
            best_c = c;
          }
        }
      }
      comm_tot[best_c] += strength[v];
      if (best_c != old_c) {
        comm[v] = best_c;
        moved = true;
      }
    }
  }

  // Compact labels.
  std::map<int, int> remap;
  for (int& c : comm) {
    auto [it, fresh] = remap.try_emplace(c, static_cast<int>(remap.size()));
    c = it->second;
  }
  return comm;
}

WGraph aggregate(const WGraph& g, const std::vector<int>& comm, int n_comm) {
  WGraph out;
  out.adj.assign(n_comm, {});
  out.self.assign(n_comm, 0.0);
  out.total_weight = g.total_weight;
  std::vector<std::map<std::uint32_t, double>> acc(n_comm);
  for (std::uint32_t v = 0; v < g.n(); ++v) {
    out.self[comm[v]] += g.self[v];
    for (const auto& [u, w] : g.adj[v]) {
      if (comm[u] == comm[v])
        out.self[comm[v]] += w;  // both orientations visit; keeps 2x counting
      else
        acc[comm[v]][comm[u]] += w;
    }
  }
  for (int c = 0; c < n_comm; ++c)
    out.adj[c].assign(acc[c].begin(), acc[c].end());
  return out;
}

}  // namespace

std::vector<int> louvain_partition(const FirmGraph& graph, std::uint64_t seed) {
  const std::size_t n = graph.n();
  std::vector<int> labels(n);
  std::iota(labels.begin(), labels.end(), 0);
  if (graph.edge_count() == 0) return labels;

  WGraph g;
  g.adj.assign(n, {});
  g.self.assign(n, 0.0);
  for (std::uint32_t v = 0; v < n; ++v)
    for (const std::uint32_t u : graph.adj[v]) g.adj[v].push_back({u, 1.0});
  g.total_weight = 2.0 * static_cast<double>(graph.edge_count());

  Rng rng(derive_seed(seed, "netstats.louvain"));
  while (true) {
    const std::vector<int> comm = local_move(g, rng);
    int n_comm = 0;
    for (const int c : comm) n_comm = std::max(n_comm, c + 1);
    for (std::size_t v = 0; v < n; ++v) labels[v] = comm[labels[v]];
    if (static_cast<std::size_t>(n_comm) == g.n()) break;  // no merge happened
    g = aggregate(g, comm, n_comm);
  }
  return labels;
}

std::vector<double> clustering_coefficients(const FirmGraph& graph) {
  std::vector<double> out(graph.n(), 0.0);
  for (std::uint32_t v = 0; v < graph.n(); ++v) {
    const auto& nb = graph.adj[v];
    const std::size_t k = nb.size();
    if (k < 2) continue;
    std::size_t links = 0;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j)
        if (std::binary_search(graph.adj[nb[i]].begin(), graph.adj[nb[i]].end(), nb[j])) ++links;
    out[v] = 2.0 * static_cast<double>(links) / (static_cast<double>(k) * (k - 1));
  }
  return out;
}

double mean_clustering(const FirmGraph& graph) {
  const auto cc = clustering_coefficients(graph);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::uint32_t v = 0; v < graph.n(); ++v) {
    if (graph.degree(v) == 0) continue;
    sum += cc[v];
    ++n;
  }
  if (n == 0) throw ValidationError("mean clustering undefined without edges");
  return sum / static_cast<double>(n);
}

double degree_assortativity(const FirmGraph& graph) {
  std::vector<double> xs, ys;
  for (std::uint32_t v = 0; v < graph.n(); ++v)
    for (const std::uint32_t u : graph.adj[v]) {
      xs.push_back(static_cast<double>(graph.degree(v)));
      ys.push_back(static_cast<double>(graph.degree(u)));
    }
  if (xs.size() < 4) throw ValidationError("assortativity needs at least 2 edges");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw ValidationError("assortativity undefined: zero degree variance");
  return sxy / std::sqrt(sxx * syy);
}

DegreeSummary degree_distribution_summary(const FirmGraph& graph, std::size_t k_min) {
  DegreeSummary s;
  s.k_min = k_min;
  std::vector<std::size_t> degs;
  for (std::uint32_t v = 0; v < graph.n(); ++v) {
    const std::size_t k = graph.degree(v);
    if (k == 0) continue;
    degs.push_back(k);
    s.histogram[k] += 1;
    s.max_degree = std::max(s.max_degree, k);
  }
  if (degs.empty()) return s;
  std::sort(degs.begin(), degs.end());
  s.median_degree = degs.size() % 2 ? static_cast<double>(degs[degs.size() / 2])
                                    : (static_cast<double>(degs[degs.size() / 2 - 1]) +
                                       static_cast<double>(degs[degs.size() / 2])) /
                                          2.0;

  // CCDF regression: P(K >= k) over distinct degrees >= k_min. The CCDF slope
  // is 1 - exponent for a power-law pdf, so report |slope| + 1.
  std::vector<double> lx, ly;
  const double total = static_cast<double>(degs.size());
  std::size_t seen = 0;
  for (const auto& [k, cnt] : s.histogram) {
    const double ccdf = (total - static_cast<double>(seen)) / total;  // P(K >= k)
    if (k >= k_min && ccdf > 0.0) {
      lx.push_back(std::log(static_cast<double>(k)));
      ly.push_back(std::log(ccdf));
    }
    seen += cnt;
  }
  if (lx.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= lx.size();
    my /= lx.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx > 0.0) s.tail_exponent = -sxy / sxx + 1.0;
  }
  return s;
}

void write_stats_report(const FirmGraph& graph, std::uint64_t seed, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  const auto part = louvain_partition(graph, seed);
  const double q = modularity(graph, part);
  std::map<int, int> sizes;
  for (std::uint32_t v = 0; v < graph.n(); ++v)
    if (graph.degree(v) > 0) sizes[part[v]] += 1;
  const auto summary = degree_distribution_summary(graph);

  out << "nodes " << graph.n() << "\n";
  out << "edges " << graph.edge_count() << "\n";
  out << "modularity " << format_double(q) << "\n";
  out << "communities " << sizes.size() << "\n";
  out << "community_sizes";
  for (const auto& [c, n] : sizes) out << ' ' << n;
  out << "\n";
  out << "mean_clustering " << format_double(mean_clustering(graph)) << "\n";
  out << "assortativity " << format_double(degree_assortativity(graph)) << "\n";
  out << "max_degree " << summary.max_degree << "\n";
  out << "median_degree " << format_double(summary.median_degree) << "\n";
  out << "tail_exponent " << format_double(summary.tail_exponent) << "\n";
  out << "degree_histogram";
  for (const auto& [k, n] : summary.histogram) out << ' ' << k << ':' << n;
  out << "\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace sclab
