#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "sclab/firmgen.hpp"

namespace sclab {

enum class ScenarioKind { Std, Shocks, Missing };

enum class DemandType { Uniform, Weekday, Weekend };

struct Order {
  FirmId buyer = 0;  // may be kConsumer
  FirmId supplier = 0;
  ProductId product = 0;
  double amount = 0.0;
  std::int32_t placed_at = 0;
  std::uint64_t seq = 0;  // global placement sequence, breaks placed_at ties
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::Std;
  double p_shock = 0.0;           // per Tier-0 product, per step
  double supply_shock = 10000.0;  // supply level right after a shock
  double recovery_rate = 1.25;
  // Cap, 1000x supply_shock. Unit requirements compound multiplicatively down
  // the tiers, so Tier-0 orders run ~1e5-2e6; the stable level must clear the
  // largest of them for supply to be "plentiful", while a shock to 1e4 chokes
  // most orders until the ~31-step recovery (1.25^31 ~ 1000).
  double stable_supply = 1e7;
  double missing_frac = 0.0;
  double p_default = 0.8;  // stickiness to the default supplier
  double drift_sd = 0.1;
  double initial_demand = 10.0;  // d(p, -1) for every final-tier product
  std::int32_t steps = 200;
  std::uint64_t seed = 0;

  void validate() const;
  static Scenario preset(ScenarioKind kind, std::uint64_t seed);
  static Scenario preset(const std::string& name, std::uint64_t seed);
};

struct ShockEvent {
  ProductId product = 0;
  std::int32_t t = 0;
};

struct SimState {
  std::vector<std::vector<double>> inventories;  // firm x product
  std::vector<std::deque<Order>> order_book;     // incomplete orders, per supplier, FIFO
  std::vector<Order> completed_last;             // orders completed at t-1
  std::vector<std::vector<double>> pending;      // firm x product: own open purchase orders
  std::vector<double> supply;                    // per Tier-0 product
  std::vector<double> demand_base;               // per final-tier product, d(p, t-1)
  std::vector<DemandType> demand_type;           // per final-tier product
  std::int32_t t = 0;
  std::uint64_t next_seq = 0;
  std::vector<ShockEvent> shock_log;
};

struct SimInputs {
  const ProductionGraph& prod_graph;
  const SupplyMap& supply_map;
  const DefaultSupplierMap& default_suppliers;
  std::size_t n_firms;
};

SimState init_state(const SimInputs& in, const Scenario& scenario);

// Per Tier-0 product: with prob p_shock the supply drops to supply_shock,
// otherwise it recovers multiplicatively up to stable_supply.
void update_exogenous_supply(SimState& state, const SimInputs& in, const Scenario& scenario,
                             Rng& rng);

// Updates d(p, t) for every final-tier product and appends one Poisson
// consumer order per supplying firm (zero draws are omitted).
std::vector<Order> consumer_demand(SimState& state, const SimInputs& in, const Scenario& scenario,
                                   Rng& rng, std::int32_t t);

// One simulation timestep; returns the transactions completed at state.t and
// advances state.t.
std::vector<Transaction> step(SimState& state, const SimInputs& in, const Scenario& scenario,
                              Rng& rng);

Dataset run(const ProductionGraph& prod_graph, const FirmUniverse& firms, const Scenario& scenario,
            std::vector<ShockEvent>* shock_log = nullptr);

// Removes every transaction touching floor(missing_frac * n_firms) uniformly
// sampled firms; the node universe is unchanged.
Dataset drop_firms(const Dataset& dataset, double missing_frac, Rng& rng);

void serialize_shock_log(const std::vector<ShockEvent>& log, const std::string& path);

}  // namespace sclab
