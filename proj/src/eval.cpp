#include "sclab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace sclab {

NegativeSampler::NegativeSampler(const Dataset& full_dataset, std::span<const Transaction> train) {
  std::set<FirmId> sup, buy;
  std::set<ProductId> prod;
  std::map<std::tuple<FirmId, FirmId, ProductId>, std::uint64_t> counts;
  for (const Transaction& x : train) {
    sup.insert(x.supplier);
    buy.insert(x.buyer);
    prod.insert(x.product);
    counts[{x.supplier, x.buyer, x.product}] += 1;
  }
  suppliers_.assign(sup.begin(), sup.end());
  buyers_.assign(buy.begin(), buy.end());
  products_.assign(prod.begin(), prod.end());
  std::uint64_t cum = 0;
  hist_triplets_.reserve(counts.size());
  hist_cum_.reserve(counts.size());
  for (const auto& [key, c] : counts) {
    cum += c;
    hist_triplets_.push_back(key);
    hist_cum_.push_back(cum);
  }
  for (const Transaction& x : full_dataset.transactions)
    occurrences_.insert({x.t, x.supplier, x.buyer, x.product});
}

bool NegativeSampler::occurs_at(std::int32_t t, FirmId s, FirmId b, ProductId p) const {
  return occurrences_.count({t, s, b, p}) > 0;
}

NegativeSet NegativeSampler::sample(const Transaction& positive, Rng& rng) const {
  if (suppliers_.size() < 2 || buyers_.size() < 2 || products_.size() < 2)
    throw ValidationError("train universe too small for negative sampling");

  NegativeSet out;
  out.positive = positive;
  std::set<std::tuple<FirmId, FirmId, ProductId>> chosen;

  auto try_add = [&](FirmId s, FirmId b, ProductId p, NegProvenance why) {
    if (s == b) return false;  // never a valid transaction shape
    if (occurs_at(positive.t, s, b, p)) return false;
    if (!chosen.insert({s, b, p}).second) return false;
    out.negatives.push_back({s, b, p, why});
    return true;
  };

  // A degenerate corpus can exhaust one swap type (e.g. a single alternative
  // supplier), so after kMaxAttempts a perturbation draw falls through to the
  // next swap type before giving up entirely.
  constexpr int kMaxAttempts = 1000;
  const NegProvenance kinds[3] = {NegProvenance::SupplierSwap, NegProvenance::BuyerSwap,
                                  NegProvenance::ProductSwap};
  auto perturb = [&](NegProvenance first) {
    int start = 0;
    while (kinds[start] != first) ++start;
    for (int offset = 0; offset < 3; ++offset) {
      const NegProvenance kind = kinds[(start + offset) % 3];
      for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        switch (kind) {
          case NegProvenance::SupplierSwap: {
            const FirmId s = suppliers_[rng.index(suppliers_.size())];
            if (s == positive.supplier) break;  // must differ in the swapped slot
            if (try_add(s, positive.buyer, positive.product, kind)) return;
            break;
          }
          case NegProvenance::BuyerSwap: {
            const FirmId b = buyers_[rng.index(buyers_.size())];
            if (b == positive.buyer) break;
            if (try_add(positive.supplier, b, positive.product, kind)) return;
            break;
          }
          case NegProvenance::ProductSwap: {
            const ProductId p = products_[rng.index(products_.size())];
            if (p == positive.product) break;
            if (try_add(positive.supplier, positive.buyer, p, kind)) return;
            break;
          }
          default: break;
        }
      }
    }
    throw ValidationError("cannot find enough distinct negatives in this corpus");
  };

  for (int k = 0; k < 3; ++k) perturb(NegProvenance::SupplierSwap);
  for (int k = 0; k < 3; ++k) perturb(NegProvenance::BuyerSwap);
  for (int k = 0; k < 3; ++k) perturb(NegProvenance::ProductSwap);

  // Historical negatives, count-proportional; after 100 failed draws fall
  // back to perturbation draws to keep sampling total.
  const std::uint64_t total = hist_cum_.empty() ? 0 : hist_cum_.back();
  const NegProvenance fallback[3] = {NegProvenance::SupplierSwap, NegProvenance::BuyerSwap,
                                     NegProvenance::ProductSwap};
  int fb = 0;
  for (int k = 0; k < 9; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < 100 && total > 0; ++attempt) {
      const std::uint64_t r = static_cast<std::uint64_t>(rng.uniform_int(1, static_cast<std::int64_t>(total)));
      const std::size_t idx = static_cast<std::size_t>(
          std::lower_bound(hist_cum_.begin(), hist_cum_.end(), r) - hist_cum_.begin());
      const auto& [s, b, p] = hist_triplets_[idx];
      if (try_add(s, b, p, NegProvenance::Historical)) {
        placed = true;
        break;
      }
    }
    if (!placed) perturb(fallback[fb++ % 3]);
  }
  return out;
}

void MrrAccumulator::add(double positive_score, std::span<const double> negative_scores) {
  std::size_t opt = 0, pes = 0;
  for (const double s : negative_scores) {
    if (s > positive_score) ++opt;
    if (s >= positive_score) ++pes;
  }
  sum_ += 1.0 / (static_cast<double>(opt + pes) / 2.0 + 1.0);
  ++n_;
}

double MrrAccumulator::value() const {
  if (n_ == 0) throw ValidationError("MRR over zero positives");
  return sum_ / static_cast<double>(n_);
}

double precision_at_k(std::span<const ProductId> ranking, const std::set<ProductId>& relevant,
                      std::size_t k) {
  if (k < 1 || k > ranking.size()) throw ValidationError("precision_at_k: k out of range");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i)
    if (relevant.count(ranking[i])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(k);
}

std::optional<double> average_precision(std::span<const ProductId> ranking,
                                        const std::set<ProductId>& relevant) {
  if (relevant.empty()) return std::nullopt;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    if (!relevant.count(ranking[k])) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(relevant.size());
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("mean over empty list");
  double sum = 0.0;
  for (const double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

AmountScaler AmountScaler::fit(std::span<const Transaction> train) {
  if (train.empty()) throw ValidationError("cannot fit scaler on empty train split");
  double mean = 0.0;
  for (const Transaction& x : train) {
    if (x.amount <= 0.0) throw ValidationError("scaler requires positive amounts");
    mean += std::log(x.amount);
  }
  mean /= static_cast<double>(train.size());
  double var = 0.0;
  for (const Transaction& x : train) {
    const double d = std::log(x.amount) - mean;
    var += d * d;
  }
  var /= static_cast<double>(train.size());  // population variance
  AmountScaler s;
  s.mean = mean;
  s.std = std::sqrt(var);
  return s;
}

double AmountScaler::scale(double amount) const {
  if (amount <= 0.0) throw ValidationError("scale: amount must be positive");
  if (std <= 0.0) return 0.0;
  return (std::log(amount) - mean) / std;
}

double AmountScaler::unscale(double scaled) const {
  if (std <= 0.0) return std::exp(mean);
  return std::exp(scaled * std + mean);
}

double rmse(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size() || predicted.empty())
    throw ValidationError("rmse: need equal-length non-empty inputs");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - truth[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(predicted.size()));
}

}  // namespace sclab
