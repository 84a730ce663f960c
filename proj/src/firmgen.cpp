#include "sclab/firmgen.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace sclab {

void FirmGenConfig::validate(std::uint32_t T) const {
  if (n_group < 1) throw ConfigError("n_group must be >= 1");
  if (n_consec < 1 || n_consec > T + 2) throw ConfigError("n_consec must be in [1, T+2]");
  if (suppliers_range.first < 1 || suppliers_range.first > suppliers_range.second)
    throw ConfigError("suppliers_range must be a non-empty positive range");
}

std::vector<Firm> assign_firm_groups(const FirmGenConfig& config, std::uint32_t T) {
  config.validate(T);
  Rng rng(derive_seed(config.seed, "firmgen.groups"));
  std::vector<Firm> firms;
  const std::uint32_t groups = config.n_groups(T);
  firms.reserve(static_cast<std::size_t>(groups) * config.n_group);
  FirmId id = 0;
  for (std::uint32_t g = 0; g < groups; ++g) {
    for (std::uint32_t i = 0; i < config.n_group; ++i) {
      Firm f;
      f.id = id++;
      f.group = static_cast<int>(g);
      f.x = rng.uniform();
      f.y = rng.uniform();
      firms.push_back(f);
    }
  }
  return firms;
}

SupplyMap assign_suppliers(const ProductionGraph& prod_graph, const std::vector<Firm>& firms,
                           const FirmGenConfig& config, Rng& rng) {
  SupplyMap supply(prod_graph.m());
  for (const Product& p : prod_graph.products) {
    std::vector<FirmId> viable;
    for (const Firm& f : firms)
      if (group_covers_tier(config, f.group, p.tier)) viable.push_back(f.id);
    if (viable.empty())
      throw ConfigError("no viable firms for tier " + std::to_string(p.tier));

    std::uint32_t k = static_cast<std::uint32_t>(
        rng.uniform_int(config.suppliers_range.first, config.suppliers_range.second));
    k = std::min<std::uint32_t>(k, static_cast<std::uint32_t>(viable.size()));

    std::sort(viable.begin(), viable.end(), [&](FirmId a, FirmId b) {
      const double da = dist2(p.x, p.y, firms[a].x, firms[a].y);
      const double db = dist2(p.x, p.y, firms[b].x, firms[b].y);
      if (da != db) return da < db;
      return a < b;
    });
    viable.resize(k);
    std::sort(viable.begin(), viable.end());
    supply[p.id] = std::move(viable);
  }
  return supply;
}

std::vector<std::vector<ProductId>> firm_input_products(const SupplyMap& supply_map,
                                                        const ProductionGraph& prod_graph,
                                                        std::size_t n_firms) {
  std::vector<std::set<ProductId>> inputs(n_firms);
  for (ProductId p = 0; p < supply_map.size(); ++p)
    for (const FirmId f : supply_map[p])
      for (const PartSpec& ps : prod_graph.parts[p]) inputs[f].insert(ps.part);
  std::vector<std::vector<ProductId>> out(n_firms);
  for (std::size_t f = 0; f < n_firms; ++f) out[f].assign(inputs[f].begin(), inputs[f].end());
  return out;
}

DefaultSupplierMap assign_default_suppliers(const SupplyMap& supply_map,
                                            const ProductionGraph& prod_graph, Rng& rng,
                                            std::size_t n_firms) {
  if (n_firms == 0)
    for (const auto& suppliers : supply_map)
      for (const FirmId f : suppliers) n_firms = std::max<std::size_t>(n_firms, f + 1);

  const auto inputs = firm_input_products(supply_map, prod_graph, n_firms);
  DefaultSupplierMap out;
  std::vector<std::set<FirmId>> buyers_of(n_firms);  // distinct buyers per supplier
  for (FirmId b = 0; b < n_firms; ++b) {
    for (const ProductId p : inputs[b]) {
      // A firm never buys from itself (no self-loops), so it may supply an
      // input product and still need an external default for it.
      std::vector<FirmId> suppliers;
      for (const FirmId s : supply_map[p])
        if (s != b) suppliers.push_back(s);
      if (suppliers.empty())
        throw ConfigError("product " + std::to_string(p) +
                          " has no suppliers other than firm " + std::to_string(b));
      double total = 0.0;
      for (const FirmId s : suppliers)
        total += static_cast<double>(buyers_of[s].size()) + 1.0;
      double r = rng.uniform() * total;
      FirmId pick = suppliers.back();
      for (const FirmId s : suppliers) {
        r -= static_cast<double>(buyers_of[s].size()) + 1.0;
        if (r <= 0.0) {
          pick = s;
          break;
        }
      }
      out[{b, p}] = pick;
      buyers_of[pick].insert(b);
    }
  }
  return out;
}

FirmUniverse build_firm_universe(const ProductionGraph& prod_graph, const FirmGenConfig& config) {
  const std::uint32_t T = static_cast<std::uint32_t>(prod_graph.n_tiers()) - 2;
  FirmUniverse u;
  u.firms = assign_firm_groups(config, T);
  Rng rng(derive_seed(config.seed, "firmgen.suppliers"));
  u.supply_map = assign_suppliers(prod_graph, u.firms, config, rng);
  Rng pa_rng(derive_seed(config.seed, "firmgen.attachment"));
  u.default_suppliers = assign_default_suppliers(u.supply_map, prod_graph, pa_rng, u.firms.size());
  return u;
}

void serialize_firms(const FirmUniverse& u, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "# sclab firm universe v1\n";
  for (const Firm& f : u.firms)
    out << "firm " << f.id << ' ' << f.group << ' ' << format_double(f.x) << ' '
        << format_double(f.y) << '\n';
  for (ProductId p = 0; p < u.supply_map.size(); ++p) {
    out << "suppliers " << p;
    for (const FirmId s : u.supply_map[p]) out << ' ' << s;
    out << '\n';
  }
  for (const auto& [key, s] : u.default_suppliers)
    out << "default " << key.first << ' ' << key.second << ' ' << s << '\n';
  if (!out) throw IoError("write failed: " + path);
}

FirmUniverse parse_firms(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open firm universe: " + path);
  FirmUniverse u;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    const std::string where = path + ":" + std::to_string(lineno);
    if (tag == "firm") {
      Firm f;
      if (!(ss >> f.id >> f.group >> f.x >> f.y)) throw ParseError(where + ": malformed firm");
      u.firms.push_back(f);
    } else if (tag == "suppliers") {
      ProductId p;
      if (!(ss >> p)) throw ParseError(where + ": malformed suppliers record");
      if (u.supply_map.size() <= p) u.supply_map.resize(p + 1);
      FirmId s;
      while (ss >> s) u.supply_map[p].push_back(s);
    } else if (tag == "default") {
      FirmId b, s;
      ProductId p;
      if (!(ss >> b >> p >> s)) throw ParseError(where + ": malformed default record");
      u.default_suppliers[{b, p}] = s;
    } else {
      throw ParseError(where + ": unexpected record '" + tag + "'");
    }
  }
  return u;
}

}  // namespace sclab
