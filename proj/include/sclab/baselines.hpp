#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "sclab/core.hpp"

namespace sclab {

// Dense (product, candidate part) -> score table; row = product whose parts
// are being ranked, column = candidate part.
struct PairScoreTable {
  std::uint32_t m = 0;
  std::vector<double> scores;  // m*m

  double at(ProductId product, ProductId candidate) const { return scores[product * m + candidate]; }
  double& at(ProductId product, ProductId candidate) { return scores[product * m + candidate]; }
};

// Mean over firms (that buy p_cand and supply p) of the max-lag Pearson
// correlation between the firm's bought-amount series of p_cand and its
// supplied-amount series of p, with the supply series lagging by 0..7 days.
// No such firm -> 0; a constant series contributes 0.
PairScoreTable temporal_correlation_scores(const std::vector<Transaction>& train, std::uint32_t m,
                                           std::uint32_t n_firms);

// PMI(p, cand) = log[P(buy cand and supply p) / (P(buy cand) P(supply p))],
// probabilities as fractions of transacting firms. Zero joint or marginal
// count -> sentinel (global minimum finite PMI - 1) so sorting stays total.
PairScoreTable pmi_scores(const std::vector<Transaction>& train, std::uint32_t m,
                          std::uint32_t n_firms);

// I.i.d. Uniform(0,1) per ordered pair, deterministic per seed.
PairScoreTable random_ranking(std::uint32_t m, std::uint64_t seed);

// Memorization baseline over train triplets (s, b, p); timestep ignored.
struct Edgebank {
  std::map<std::tuple<FirmId, FirmId, ProductId>, std::uint64_t> counts;

  double score_binary(FirmId s, FirmId b, ProductId p) const {
    return counts.count({s, b, p}) ? 1.0 : 0.0;
  }
  double score_count(FirmId s, FirmId b, ProductId p) const {
    const auto it = counts.find({s, b, p});
    return it == counts.end() ? 0.0 : static_cast<double>(it->second);
  }
};

Edgebank build_edgebank(const std::vector<Transaction>& train);

void serialize_score_table(const PairScoreTable& table, const std::string& path);

}  // namespace sclab
