#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sclab/core.hpp"
#include "sclab/rng.hpp"

namespace sclab {

struct Product {
  ProductId id = 0;
  int tier = 0;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Product&, const Product&) = default;
};

struct PartSpec {
  ProductId part = 0;
  std::uint32_t units = 0;  // units of `part` per unit of the product

  friend bool operator==(const PartSpec&, const PartSpec&) = default;
};

// Ground-truth product DAG: edges run from tier tau-1 into tier tau, so the
// graph is acyclic by construction. Tier-0 products have no parts.
struct ProductionGraph {
  std::vector<Product> products;
  std::vector<std::vector<PartSpec>> parts;  // indexed by product id

  std::uint32_t m() const { return static_cast<std::uint32_t>(products.size()); }
  int n_tiers() const;
  int tier_of(ProductId p) const { return products[p].tier; }
  std::vector<ProductId> products_in_tier(int tier) const;

  friend bool operator==(const ProductionGraph&, const ProductionGraph&) = default;
};

struct ProdGenConfig {
  std::uint32_t n_exog = 5;
  std::uint32_t n_consumer = 5;
  std::uint32_t n_tier = 10;
  std::uint32_t T = 4;  // number of inner tiers; T+2 tiers overall
  std::pair<std::uint32_t, std::uint32_t> parts_range{2, 4};
  std::pair<std::uint32_t, std::uint32_t> units_range{1, 4};
  bool deterministic_closest = true;  // pick the k nearest previous-tier products
  double gamma = -2.0;                // distance exponent when not deterministic
  std::uint64_t seed = 0;

  void validate() const;
  std::uint32_t total_products() const { return n_exog + T * n_tier + n_consumer; }
};

// Contiguous-block tier layout: ids 0..n_exog-1 are tier 0, then T blocks of
// n_tier, then n_consumer final-tier products.
std::vector<std::pair<ProductId, int>> assign_tiers(const ProdGenConfig& config);

// Part assignment for one tier (tier >= 1): k ~ Uniform{parts_range} parts
// drawn from the previous tier, either the k nearest by Euclidean distance
// (ties broken by lower id) or weighted by d^gamma without replacement.
// k is clamped to the previous tier's size.
std::vector<std::vector<PartSpec>> assign_parts(const std::vector<Product>& products, int tier,
                                                const ProdGenConfig& config, Rng& rng);

ProductionGraph build_production_graph(const ProdGenConfig& config);

void serialize_production_graph(const ProductionGraph& g, const std::string& path);
ProductionGraph parse_production_graph(const std::string& path);

inline double dist2(double ax, double ay, double bx, double by) {
  const double dx = ax - bx, dy = ay - by;
  return dx * dx + dy * dy;
}

}  // namespace sclab
