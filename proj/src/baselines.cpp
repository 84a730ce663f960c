#include "sclab/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "sclab/rng.hpp"

namespace sclab {

namespace {

// Pearson correlation of x against y shifted forward by `lag` (y lags x):
// pairs (x[t], y[t+lag]). Returns 0 for degenerate overlap or zero variance.
double lagged_pearson(const std::vector<double>& x, const std::vector<double>& y, int lag) {
  const std::size_t len = x.size() > static_cast<std::size_t>(lag) ? x.size() - lag : 0;
  if (len < 2) return 0.0;
  double mx = 0, my = 0;
  for (std::size_t t = 0; t < len; ++t) {
    mx += x[t];
    my += y[t + lag];
  }
  mx /= len;
  my /= len;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t t = 0; t < len; ++t) {
    const double dx = x[t] - mx, dy = y[t + lag] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

PairScoreTable temporal_correlation_scores(const std::vector<Transaction>& train, std::uint32_t m,
                                           std::uint32_t n_firms) {
  if (train.empty()) throw ValidationError("train split is empty");
  const std::int32_t t_lo = train.front().t;
  const std::int32_t t_hi = train.back().t;
  const std::size_t len = static_cast<std::size_t>(t_hi - t_lo) + 1;

  // Per-firm per-product daily series, built sparsely.
  std::vector<std::map<ProductId, std::vector<double>>> bought(n_firms), supplied(n_firms);
  auto series = [&](std::map<ProductId, std::vector<double>>& side, ProductId p) -> std::vector<double>& {
    auto [it, fresh] = side.try_emplace(p);
    if (fresh) it->second.assign(len, 0.0);
    return it->second;
  };
  for (const Transaction& x : train) {
    const std::size_t day = static_cast<std::size_t>(x.t - t_lo);
    series(supplied[x.supplier], x.product)[day] += x.amount;
    if (x.buyer != kConsumer) series(bought[x.buyer], x.product)[day] += x.amount;
  }

  PairScoreTable table;
  table.m = m;
  table.scores.assign(static_cast<std::size_t>(m) * m, 0.0);
  std::vector<double> sums(static_cast<std::size_t>(m) * m, 0.0);
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(m) * m, 0);

  for (FirmId f = 0; f < n_firms; ++f) {
    if (bought[f].empty() || supplied[f].empty()) continue;
    for (const auto& [cand, buy_series] : bought[f]) {
      for (const auto& [prod, supply_series] : supplied[f]) {
        double best = -std::numeric_limits<double>::infinity();
        for (int lag = 0; lag <= 7; ++lag)
          best = std::max(best, lagged_pearson(buy_series, supply_series, lag));
        sums[prod * m + cand] += best;
        counts[prod * m + cand] += 1;
      }
    }
  }
  for (std::size_t k = 0; k < sums.size(); ++k)
    if (counts[k] > 0) table.scores[k] = sums[k] / counts[k];
  return table;
}

PairScoreTable pmi_scores(const std::vector<Transaction>& train, std::uint32_t m,
                          std::uint32_t n_firms) {
  if (train.empty()) throw ValidationError("train split is empty");
  std::vector<std::set<ProductId>> buys(n_firms), supplies(n_firms);
  std::set<FirmId> seen;
  for (const Transaction& x : train) {
    supplies[x.supplier].insert(x.product);
    seen.insert(x.supplier);
    if (x.buyer != kConsumer) {
      buys[x.buyer].insert(x.product);
      seen.insert(x.buyer);
    }
  }
  const double n = static_cast<double>(seen.size());

  std::vector<std::uint32_t> buy_count(m, 0), supply_count(m, 0);
  std::vector<std::uint32_t> joint(static_cast<std::size_t>(m) * m, 0);
  for (const FirmId f : seen) {
    for (const ProductId p : buys[f]) buy_count[p] += 1;
    for (const ProductId p : supplies[f]) supply_count[p] += 1;
    for (const ProductId prod : supplies[f])
      for (const ProductId cand : buys[f]) joint[prod * m + cand] += 1;
  }

  PairScoreTable table;
  table.m = m;
  table.scores.assign(static_cast<std::size_t>(m) * m, 0.0);
  double min_finite = std::numeric_limits<double>::infinity();
  std::vector<char> finite(table.scores.size(), 0);
  for (ProductId prod = 0; prod < m; ++prod) {
    for (ProductId cand = 0; cand < m; ++cand) {
      const std::size_t k = prod * m + cand;
      if (joint[k] == 0 || buy_count[cand] == 0 || supply_count[prod] == 0) continue;
      const double p_joint = joint[k] / n;
      const double v = std::log(p_joint / ((buy_count[cand] / n) * (supply_count[prod] / n)));
      table.scores[k] = v;
      finite[k] = 1;
      min_finite = std::min(min_finite, v);
    }
  }
  const double sentinel = std::isfinite(min_finite) ? min_finite - 1.0 : -1.0;
  for (std::size_t k = 0; k < table.scores.size(); ++k)
    if (!finite[k]) table.scores[k] = sentinel;
  return table;
}

PairScoreTable random_ranking(std::uint32_t m, std::uint64_t seed) {
  if (m < 2) throw ConfigError("random_ranking needs m >= 2");
  Rng rng(derive_seed(seed, "baselines.random"));
  PairScoreTable table;
  table.m = m;
  table.scores.resize(static_cast<std::size_t>(m) * m);
  for (double& v : table.scores) v = rng.uniform();
  return table;
}

Edgebank build_edgebank(const std::vector<Transaction>& train) {
  if (train.empty()) throw ValidationError("train split is empty");
  Edgebank e;
  for (const Transaction& x : train) e.counts[{x.supplier, x.buyer, x.product}] += 1;
  return e;
}

void serialize_score_table(const PairScoreTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "# product candidate score\n";
  for (ProductId p = 0; p < table.m; ++p)
    for (ProductId c = 0; c < table.m; ++c)
      out << p << ' ' << c << ' ' << format_double(table.at(p, c)) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace sclab
