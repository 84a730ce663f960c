#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "sclab/core.hpp"
#include "sclab/rng.hpp"

namespace sclab {

enum class NegProvenance { SupplierSwap, BuyerSwap, ProductSwap, Historical };

struct Negative {
  FirmId supplier = 0;
  FirmId buyer = 0;
  ProductId product = 0;
  NegProvenance provenance = NegProvenance::Historical;
};

struct NegativeSet {
  Transaction positive;
  std::vector<Negative> negatives;  // exactly 18, distinct, none true at positive.t
};

// Indexes the train split (node pools, triplet counts) plus the full
// dataset's (t,s,b,p) occurrence set used for validity checks.
class NegativeSampler {
 public:
  NegativeSampler(const Dataset& full_dataset, std::span<const Transaction> train);

  NegativeSet sample(const Transaction& positive, Rng& rng) const;

 private:
  bool occurs_at(std::int32_t t, FirmId s, FirmId b, ProductId p) const;

  std::vector<FirmId> suppliers_, buyers_;
  std::vector<ProductId> products_;
  std::vector<std::tuple<FirmId, FirmId, ProductId>> hist_triplets_;
  std::vector<std::uint64_t> hist_cum_;  // cumulative counts for weighted draws
  std::set<std::tuple<std::int32_t, FirmId, FirmId, ProductId>> occurrences_;
};

// Streaming MRR over (positive score, negative scores) batches. Optimistic
// rank counts negatives strictly above the positive, pessimistic counts
// negatives at or above; the reciprocal uses their mean + 1.
class MrrAccumulator {
 public:
  void add(double positive_score, std::span<const double> negative_scores);
  double value() const;
  std::size_t count() const { return n_; }

 private:
  double sum_ = 0.0;
  std::size_t n_ = 0;
};

double precision_at_k(std::span<const ProductId> ranking, const std::set<ProductId>& relevant,
                      std::size_t k);

// AP per Eq-style definition; empty relevant set -> nullopt (excluded from MAP).
std::optional<double> average_precision(std::span<const ProductId> ranking,
                                        const std::set<ProductId>& relevant);

double mean_of(const std::vector<double>& values);

// log then standard scaling, population std fitted on train amounts.
struct AmountScaler {
  double mean = 0.0;
  double std = 0.0;

  static AmountScaler fit(std::span<const Transaction> train);
  double scale(double amount) const;
  double unscale(double scaled) const;
};

double rmse(std::span<const double> predicted, std::span<const double> truth);

}  // namespace sclab
