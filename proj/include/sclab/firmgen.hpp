#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sclab/prodgen.hpp"

namespace sclab {

struct Firm {
  FirmId id = 0;
  int group = 0;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Firm&, const Firm&) = default;
};

// product id -> supplier firm ids (each supplier's group covers the tier)
using SupplyMap = std::vector<std::vector<FirmId>>;

// (buyer firm, input product) -> default supplier
using DefaultSupplierMap = std::map<std::pair<FirmId, ProductId>, FirmId>;

struct FirmGenConfig {
  std::uint32_t n_group = 30;  // firms per group
  std::uint32_t n_consec = 2;  // consecutive tiers covered by each group
  std::pair<std::uint32_t, std::uint32_t> suppliers_range{4, 8};
  std::uint64_t seed = 0;

  void validate(std::uint32_t T) const;
  // Group g covers tiers [g, g+n_consec-1]; the last group ends at tier T+1.
  std::uint32_t n_groups(std::uint32_t T) const { return T - n_consec + 3; }
};

std::vector<Firm> assign_firm_groups(const FirmGenConfig& config, std::uint32_t T);

inline bool group_covers_tier(const FirmGenConfig& config, int group, int tier) {
  return tier >= group && tier < group + static_cast<int>(config.n_consec);
}

// Per product: k ~ Uniform{suppliers_range} suppliers (clamped to the viable
// count), the k closest viable firms by Euclidean distance, id tie-break.
SupplyMap assign_suppliers(const ProductionGraph& prod_graph, const std::vector<Firm>& firms,
                           const FirmGenConfig& config, Rng& rng);

// Preferential attachment over (buyer, needed product) pairs in ascending
// order: supplier weight = current distinct-buyer count + 1, counts updated
// after every draw. n_firms = 0 infers the universe from the supply map.
DefaultSupplierMap assign_default_suppliers(const SupplyMap& supply_map,
                                            const ProductionGraph& prod_graph, Rng& rng,
                                            std::size_t n_firms = 0);

// Input products a firm must buy: the union of parts of everything it supplies.
std::vector<std::vector<ProductId>> firm_input_products(const SupplyMap& supply_map,
                                                        const ProductionGraph& prod_graph,
                                                        std::size_t n_firms);

struct FirmUniverse {
  std::vector<Firm> firms;
  SupplyMap supply_map;
  DefaultSupplierMap default_suppliers;
};

FirmUniverse build_firm_universe(const ProductionGraph& prod_graph, const FirmGenConfig& config);

void serialize_firms(const FirmUniverse& u, const std::string& path);
FirmUniverse parse_firms(const std::string& path);

}  // namespace sclab
