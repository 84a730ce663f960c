#include "sclab/prodgen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace sclab {

int ProductionGraph::n_tiers() const {
  int max_tier = -1;
  for (const Product& p : products) max_tier = std::max(max_tier, p.tier);
  return max_tier + 1;
}

std::vector<ProductId> ProductionGraph::products_in_tier(int tier) const {
  std::vector<ProductId> out;
  for (const Product& p : products)
    if (p.tier == tier) out.push_back(p.id);
  return out;
}

void ProdGenConfig::validate() const {
  if (n_exog < 1 || n_consumer < 1 || n_tier < 1)
    throw ConfigError("prodgen counts must be >= 1");
  if (parts_range.first < 1 || parts_range.first > parts_range.second)
    throw ConfigError("parts_range must be a non-empty positive range");
  if (units_range.first < 1 || units_range.first > units_range.second)
    throw ConfigError("units_range must be a non-empty positive range");
}

std::vector<std::pair<ProductId, int>> assign_tiers(const ProdGenConfig& config) {
  config.validate();
  std::vector<std::pair<ProductId, int>> out;
  out.reserve(config.total_products());
  ProductId id = 0;
  for (std::uint32_t i = 0; i < config.n_exog; ++i) out.emplace_back(id++, 0);
  for (std::uint32_t tau = 1; tau <= config.T; ++tau)
    for (std::uint32_t i = 0; i < config.n_tier; ++i) out.emplace_back(id++, static_cast<int>(tau));
  for (std::uint32_t i = 0; i < config.n_consumer; ++i)
    out.emplace_back(id++, static_cast<int>(config.T) + 1);
  return out;
}

std::vector<std::vector<PartSpec>> assign_parts(const std::vector<Product>& products, int tier,
                                                const ProdGenConfig& config, Rng& rng) {
  if (tier < 1) throw ConfigError("assign_parts requires tier >= 1");
  std::vector<ProductId> prev, cur;
  for (const Product& p : products) {
    if (p.tier == tier - 1) prev.push_back(p.id);
    if (p.tier == tier) cur.push_back(p.id);
  }
  if (prev.empty()) throw ConfigError("previous tier is empty");

  std::vector<std::vector<PartSpec>> out(products.size());
  for (const ProductId pid : cur) {
    std::uint32_t k = static_cast<std::uint32_t>(
        rng.uniform_int(config.parts_range.first, config.parts_range.second));
    if (k > prev.size()) {
      std::cerr << "warning: part count " << k << " clamped to previous-tier size " << prev.size()
                << " for product " << pid << "\n";
      k = static_cast<std::uint32_t>(prev.size());
    }

    std::vector<ProductId> chosen;
    if (config.deterministic_closest) {
      std::vector<ProductId> sorted = prev;
      const Product& me = products[pid];
      std::sort(sorted.begin(), sorted.end(), [&](ProductId a, ProductId b) {
        const double da = dist2(me.x, me.y, products[a].x, products[a].y);
        const double db = dist2(me.x, me.y, products[b].x, products[b].y);
        if (da != db) return da < db;
        return a < b;
      });
      chosen.assign(sorted.begin(), sorted.begin() + k);
    } else {
      // Weighted sampling without replacement, weight = d^gamma. Coincident
      // positions (d = 0) take the maximum finite weight in the candidate set.
      std::vector<ProductId> pool = prev;
      const Product& me = products[pid];
      for (std::uint32_t draw = 0; draw < k; ++draw) {
        std::vector<double> w(pool.size());
        double max_finite = 0.0;
        for (std::size_t i = 0; i < pool.size(); ++i) {
          const double d = std::sqrt(dist2(me.x, me.y, products[pool[i]].x, products[pool[i]].y));
          w[i] = d > 0.0 ? std::pow(d, config.gamma) : -1.0;
          if (w[i] > max_finite) max_finite = w[i];
        }
        if (max_finite == 0.0) max_finite = 1.0;
        double total = 0.0;
        for (double& wi : w) {
          if (wi < 0.0) wi = max_finite;
          total += wi;
        }
        double r = rng.uniform() * total;
        std::size_t pick = pool.size() - 1;
        for (std::size_t i = 0; i < pool.size(); ++i) {
          r -= w[i];
          if (r <= 0.0) {
            pick = i;
            break;
          }
        }
        chosen.push_back(pool[pick]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
      }
      std::sort(chosen.begin(), chosen.end());
    }

    for (const ProductId part : chosen) {
      const std::uint32_t units = static_cast<std::uint32_t>(
          rng.uniform_int(config.units_range.first, config.units_range.second));
      out[pid].push_back({part, units});
    }
  }
  return out;
}

ProductionGraph build_production_graph(const ProdGenConfig& config) {
  config.validate();
  Rng rng(derive_seed(config.seed, "prodgen"));

  ProductionGraph g;
  for (const auto& [id, tier] : assign_tiers(config)) {
    Product p;
    p.id = id;
    p.tier = tier;
    p.x = rng.uniform();
    p.y = rng.uniform();
    g.products.push_back(p);
  }
  g.parts.assign(g.products.size(), {});
  const int n_tiers = static_cast<int>(config.T) + 2;
  for (int tier = 1; tier < n_tiers; ++tier) {
    auto tier_parts = assign_parts(g.products, tier, config, rng);
    for (std::size_t i = 0; i < tier_parts.size(); ++i)
      if (!tier_parts[i].empty()) g.parts[i] = std::move(tier_parts[i]);
  }
  return g;
}

void serialize_production_graph(const ProductionGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "# sclab production graph v1\n";
  out << "# product <id> <tier> <x> <y> <n_parts> [<part_id>:<units> ...]\n";
  for (const Product& p : g.products) {
    out << "product " << p.id << ' ' << p.tier << ' ' << format_double(p.x) << ' '
        << format_double(p.y) << ' ' << g.parts[p.id].size();
    for (const PartSpec& ps : g.parts[p.id]) out << ' ' << ps.part << ':' << ps.units;
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

ProductionGraph parse_production_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open production graph: " + path);
  ProductionGraph g;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    const std::string where = path + ":" + std::to_string(lineno);
    if (tag != "product") throw ParseError(where + ": unexpected record '" + tag + "'");
    Product p;
    std::size_t n_parts = 0;
    if (!(ss >> p.id >> p.tier >> p.x >> p.y >> n_parts))
      throw ParseError(where + ": malformed product record");
    if (p.id != g.products.size()) throw ParseError(where + ": product ids must be consecutive");
    g.products.push_back(p);
    g.parts.emplace_back();
    for (std::size_t i = 0; i < n_parts; ++i) {
      std::string tok;
      if (!(ss >> tok)) throw ParseError(where + ": missing part entry");
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError(where + ": bad part entry '" + tok + "'");
      PartSpec spec;
      spec.part = static_cast<ProductId>(std::stoul(tok.substr(0, colon)));
      spec.units = static_cast<std::uint32_t>(std::stoul(tok.substr(colon + 1)));
      g.parts.back().push_back(spec);
    }
  }
  return g;
}

}  // namespace sclab
