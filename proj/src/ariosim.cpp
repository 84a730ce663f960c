#include "sclab/ariosim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace sclab {

namespace {

constexpr double kEps = 1e-9;

double weekly_factor(DemandType type, std::int32_t t) {
  const bool weekday = (t % 7) < 5;
  switch (type) {
    case DemandType::Uniform: return 1.0;
    case DemandType::Weekday: return weekday ? 2.0 : 0.5;
    case DemandType::Weekend: return weekday ? 0.5 : 2.0;
  }
  return 1.0;
}

}  // namespace

void Scenario::validate() const {
  if (p_shock < 0.0 || p_shock > 1.0) throw ConfigError("p_shock must be in [0,1]");
  if (recovery_rate <= 1.0) throw ConfigError("recovery rate must be > 1");
  if (missing_frac < 0.0 || missing_frac >= 1.0) throw ConfigError("missing_frac must be in [0,1)");
  if (p_default < 0.0 || p_default > 1.0) throw ConfigError("p_default must be in [0,1]");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (supply_shock <= 0.0 || stable_supply < supply_shock)
    throw ConfigError("supply levels must satisfy 0 < supply_shock <= stable_supply");
}

Scenario Scenario::preset(ScenarioKind kind, std::uint64_t seed) {
  Scenario s;
  s.kind = kind;
  s.seed = seed;
  switch (kind) {
    case ScenarioKind::Std:
      break;
    case ScenarioKind::Shocks:
      s.p_shock = 0.01;
      break;
    case ScenarioKind::Missing:
      s.missing_frac = 0.2;
      break;
  }
  return s;
}

Scenario Scenario::preset(const std::string& name, std::uint64_t seed) {
  if (name == "std") return preset(ScenarioKind::Std, seed);
  if (name == "shocks") return preset(ScenarioKind::Shocks, seed);
  if (name == "missing") return preset(ScenarioKind::Missing, seed);
  throw ConfigError("unknown scenario '" + name + "' (expected std|shocks|missing)");
}

SimState init_state(const SimInputs& in, const Scenario& scenario) {
  scenario.validate();
  SimState st;
  const std::uint32_t m = in.prod_graph.m();
  st.inventories.assign(in.n_firms, std::vector<double>(m, 0.0));
  st.pending.assign(in.n_firms, std::vector<double>(m, 0.0));
  st.order_book.assign(in.n_firms, {});
  st.supply.assign(m, 0.0);
  st.demand_base.assign(m, 0.0);
  st.demand_type.assign(m, DemandType::Uniform);
  const int final_tier = in.prod_graph.n_tiers() - 1;
  int idx = 0;
  for (const Product& p : in.prod_graph.products) {
    if (p.tier == 0) st.supply[p.id] = scenario.stable_supply;
    if (p.tier == final_tier) {
      st.demand_base[p.id] = scenario.initial_demand;
      // Cycle through the three consumer patterns in product-id order.
      st.demand_type[p.id] = static_cast<DemandType>(idx % 3);
      ++idx;
    }
  }
  return st;
}

void update_exogenous_supply(SimState& state, const SimInputs& in, const Scenario& scenario,
                             Rng& rng) {
  for (const Product& p : in.prod_graph.products) {
    if (p.tier != 0) continue;
    if (scenario.p_shock > 0.0 && rng.bernoulli(scenario.p_shock)) {
      state.supply[p.id] = scenario.supply_shock;
      state.shock_log.push_back({p.id, state.t});
    } else {
      state.supply[p.id] =
          std::min(scenario.stable_supply, state.supply[p.id] * scenario.recovery_rate);
    }
  }
}

std::vector<Order> consumer_demand(SimState& state, const SimInputs& in, const Scenario& scenario,
                                   Rng& rng, std::int32_t t) {
  std::vector<Order> orders;
  const int final_tier = in.prod_graph.n_tiers() - 1;
  for (const Product& p : in.prod_graph.products) {
    if (p.tier != final_tier) continue;
    const double drift = scenario.drift_sd > 0.0 ? rng.normal(0.0, scenario.drift_sd) : 0.0;
    // The weekly factor scales the day's demand level; the random walk itself
    // lives on the unscaled base so weekday doubling does not compound.
    state.demand_base[p.id] = std::max(0.0, state.demand_base[p.id] + drift);
    const double level = weekly_factor(state.demand_type[p.id], t) * state.demand_base[p.id];
    for (const FirmId f : in.supply_map[p.id]) {
      const double amount = static_cast<double>(rng.poisson(level));
      if (amount <= 0.0) continue;
      Order o;
      o.buyer = kConsumer;
      o.supplier = f;
      o.product = p.id;
      o.amount = amount;
      o.placed_at = t;
      o.seq = state.next_seq++;
      orders.push_back(o);
    }
  }
  return orders;
}

std::vector<Transaction> step(SimState& state, const SimInputs& in, const Scenario& scenario,
                              Rng& rng) {
  const std::int32_t t = state.t;
  update_exogenous_supply(state, in, scenario, rng);
  for (Order& o : consumer_demand(state, in, scenario, rng, t))
    state.order_book[o.supplier].push_back(o);

  const auto inputs = firm_input_products(in.supply_map, in.prod_graph, in.n_firms);

  std::vector<Order> completed_now;
  std::vector<Transaction> txns;

  for (FirmId f = 0; f < in.n_firms; ++f) {
    // New supply: orders completed at t-1 where this firm was the buyer.
    for (const Order& o : state.completed_last) {
      if (o.buyer != f) continue;
      state.inventories[f][o.product] += o.amount;
      state.pending[f][o.product] = std::max(0.0, state.pending[f][o.product] - o.amount);
    }

    // Production: scan incomplete orders oldest-first. An infeasible order
    // blocks every later order of the same product (per-product FIFO), but
    // other products keep flowing; a firm supplying both Tier-0 and Tier-1
    // products would otherwise wedge the whole chain. Orders placed this
    // timestep wait for the next one.
    auto& book = state.order_book[f];
    std::vector<bool> blocked(in.prod_graph.m(), false);
    std::deque<Order> keep;
    for (const Order& o : book) {
      if (o.placed_at >= t || blocked[o.product]) {
        keep.push_back(o);
        continue;
      }
      bool feasible = true;
      const auto& parts = in.prod_graph.parts[o.product];
      if (in.prod_graph.tier_of(o.product) == 0) {
        feasible = o.amount <= state.supply[o.product] + kEps;
      } else {
        for (const PartSpec& ps : parts)
          if (state.inventories[f][ps.part] + kEps < ps.units * o.amount) {
            feasible = false;
            break;
          }
      }
      if (!feasible) {
        blocked[o.product] = true;
        keep.push_back(o);
        continue;
      }
      for (const PartSpec& ps : parts) {
        double& inv = state.inventories[f][ps.part];
        inv -= ps.units * o.amount;
        if (inv < -1e-6)
          throw std::logic_error("negative inventory during production; simulator bug");
        if (inv < 0.0) inv = 0.0;
      }
      completed_now.push_back(o);
      txns.push_back({t, o.supplier, o.buyer, o.product, o.amount});
    }
    book = std::move(keep);

    // New demand: per input product, order what open supply orders require
    // beyond the inventory position (stock on hand plus goods on order).
    for (const ProductId pi : inputs[f]) {
      double needed = 0.0;
      for (const Order& o : state.order_book[f])
        for (const PartSpec& ps : in.prod_graph.parts[o.product])
          if (ps.part == pi) needed += static_cast<double>(ps.units) * o.amount;
      needed -= state.pending[f][pi] + state.inventories[f][pi];
      if (needed <= kEps) continue;

      // Never order from oneself; the candidate pool drops f before the
      // uniform draw so the exploration probability stays uniform over the
      // actual alternatives.
      std::vector<FirmId> suppliers;
      for (const FirmId s_cand : in.supply_map[pi])
        if (s_cand != f) suppliers.push_back(s_cand);
      FirmId s;
      if (suppliers.empty() || rng.bernoulli(scenario.p_default)) {
        s = in.default_suppliers.at({f, pi});
      } else {
        s = suppliers[rng.index(suppliers.size())];
      }
      Order o;
      o.buyer = f;
      o.supplier = s;
      o.product = pi;
      o.amount = needed;
      o.placed_at = t;
      o.seq = state.next_seq++;
      state.order_book[s].push_back(o);
      state.pending[f][pi] += needed;
    }
  }

  state.completed_last = std::move(completed_now);
  state.t = t + 1;
  return txns;
}

Dataset run(const ProductionGraph& prod_graph, const FirmUniverse& firms, const Scenario& scenario,
            std::vector<ShockEvent>* shock_log) {
  SimInputs in{prod_graph, firms.supply_map, firms.default_suppliers, firms.firms.size()};
  SimState st = init_state(in, scenario);
  Rng rng(derive_seed(scenario.seed, "ariosim"));

  Dataset d;
  d.n_firms = static_cast<std::uint32_t>(firms.firms.size());
  d.n_products = prod_graph.m();
  for (std::int32_t t = 0; t < scenario.steps; ++t) {
    auto txns = step(st, in, scenario, rng);
    d.transactions.insert(d.transactions.end(), txns.begin(), txns.end());
  }
  normalize_dataset(d);
  if (shock_log) *shock_log = st.shock_log;

  if (scenario.kind == ScenarioKind::Missing && scenario.missing_frac > 0.0) {
    Rng drop_rng(derive_seed(scenario.seed, "ariosim.missing"));
    d = drop_firms(d, scenario.missing_frac, drop_rng);
  }
  return d;
}

Dataset drop_firms(const Dataset& dataset, double missing_frac, Rng& rng) {
  if (missing_frac < 0.0 || missing_frac >= 1.0) throw ConfigError("missing_frac must be in [0,1)");
  const std::size_t n = dataset.n_firms;
  const std::size_t k = static_cast<std::size_t>(std::floor(missing_frac * static_cast<double>(n)));

  // Uniform sample without replacement via partial Fisher-Yates.
  std::vector<FirmId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<FirmId>(i);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(ids[i], ids[j]);
  }
  std::vector<bool> dropped(n, false);
  for (std::size_t i = 0; i < k; ++i) dropped[ids[i]] = true;

  Dataset out = dataset;
  out.transactions.clear();
  for (const Transaction& x : dataset.transactions) {
    if (dropped[x.supplier]) continue;
    if (x.buyer != kConsumer && dropped[x.buyer]) continue;
    out.transactions.push_back(x);
  }
  return out;
}

void serialize_shock_log(const std::vector<ShockEvent>& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "product,t\n";
  for (const ShockEvent& e : log) out << e.product << ',' << e.t << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace sclab
