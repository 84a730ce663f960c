#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "sclab/eval.hpp"

using namespace sclab;

namespace {

// A rich little corpus: 8 firms, 4 products, 10 days. Firms 0..3 supply to
// firms 4..7 across rotating products, plus consumer sales.
Dataset rich_dataset() {
  Dataset d;
  d.n_firms = 8;
  d.n_products = 4;
  for (int t = 0; t < 10; ++t)
    for (FirmId s = 0; s < 4; ++s) {
      const FirmId b = 4 + (s + t) % 4;
      d.transactions.push_back({t, s, b, static_cast<ProductId>((s + 2 * t) % 4),
                                1.0 + s + t});
      d.transactions.push_back({t, 4 + s, kConsumer, static_cast<ProductId>(s % 4), 2.0});
    }
  std::sort(d.transactions.begin(), d.transactions.end(), txn_key_less);
  return d;
}

}  // namespace

TEST_CASE("negative sets have 18 distinct valid members") {
  const auto d = rich_dataset();
  NegativeSampler sampler(d, d.transactions);
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const Transaction& pos = d.transactions[rng.index(d.transactions.size())];
    const auto set = sampler.sample(pos, rng);
    REQUIRE(set.negatives.size() == 18);

    std::set<std::tuple<FirmId, FirmId, ProductId>> seen;
    std::set<std::tuple<std::int32_t, FirmId, FirmId, ProductId>> occ;
    for (const Transaction& x : d.transactions) occ.insert({x.t, x.supplier, x.buyer, x.product});
    for (const Negative& n : set.negatives) {
      CHECK(seen.insert({n.supplier, n.buyer, n.product}).second);
      CHECK(n.supplier != n.buyer);
      CHECK(occ.count({pos.t, n.supplier, n.buyer, n.product}) == 0);
    }

    // First nine are perturbations: each differs from the positive in
    // exactly the swapped slot.
    for (int k = 0; k < 3; ++k) {
      CHECK(set.negatives[k].provenance == NegProvenance::SupplierSwap);
      CHECK(set.negatives[k].buyer == pos.buyer);
      CHECK(set.negatives[k].product == pos.product);
      CHECK(set.negatives[k].supplier != pos.supplier);
    }
    for (int k = 3; k < 6; ++k) {
      CHECK(set.negatives[k].provenance == NegProvenance::BuyerSwap);
      CHECK(set.negatives[k].supplier == pos.supplier);
      CHECK(set.negatives[k].product == pos.product);
      CHECK(set.negatives[k].buyer != pos.buyer);
    }
    for (int k = 6; k < 9; ++k) {
      CHECK(set.negatives[k].provenance == NegProvenance::ProductSwap);
      CHECK(set.negatives[k].supplier == pos.supplier);
      CHECK(set.negatives[k].buyer == pos.buyer);
      CHECK(set.negatives[k].product != pos.product);
    }
    std::size_t historical = 0;
    for (int k = 9; k < 18; ++k)
      if (set.negatives[k].provenance == NegProvenance::Historical) ++historical;
    CHECK(historical >= 7);  // rare fallbacks allowed, the bulk is historical
  }
}

TEST_CASE("negative sampling is deterministic per rng stream") {
  const auto d = rich_dataset();
  NegativeSampler sampler(d, d.transactions);
  Rng r1(7), r2(7);
  const auto a = sampler.sample(d.transactions[5], r1);
  const auto b = sampler.sample(d.transactions[5], r2);
  REQUIRE(a.negatives.size() == b.negatives.size());
  for (std::size_t k = 0; k < a.negatives.size(); ++k) {
    CHECK(a.negatives[k].supplier == b.negatives[k].supplier);
    CHECK(a.negatives[k].buyer == b.negatives[k].buyer);
    CHECK(a.negatives[k].product == b.negatives[k].product);
  }
}

TEST_CASE("historical draws are count-proportional") {
  // Triplet A appears 9x, B once, plus filler pairs so the corpus can fill
  // all 18 slots.
  Dataset d;
  d.n_firms = 12;
  d.n_products = 6;
  for (int t = 0; t < 9; ++t) d.transactions.push_back({t, 0, 1, 0, 1.0});  // A
  d.transactions.push_back({0, 2, 3, 1, 1.0});                              // B
  for (int i = 0; i < 4; ++i)
    for (int t = 0; t < 5; ++t)
      d.transactions.push_back({t, static_cast<FirmId>(4 + 2 * i),
                                static_cast<FirmId>(5 + 2 * i),
                                static_cast<ProductId>(2 + i), 1.0});
  std::sort(d.transactions.begin(), d.transactions.end(), txn_key_less);
  NegativeSampler sampler(d, d.transactions);

  // Count first-historical-slot outcomes across many independent streams.
  // The positive sits at t = 9, when neither A (t = 0..8) nor B (t = 0)
  // occurs, and neither can collide with a perturbation negative.
  std::size_t a_hits = 0, b_hits = 0;
  const int trials = 6000;
  for (int s = 0; s < trials; ++s) {
    Rng rng(static_cast<std::uint64_t>(s) + 1);
    const auto set = sampler.sample({9, 4, 5, 2, 1.0}, rng);
    const auto& first_hist = set.negatives[9];
    if (first_hist.provenance != NegProvenance::Historical) continue;
    if (first_hist.supplier == 0 && first_hist.buyer == 1 && first_hist.product == 0) ++a_hits;
    if (first_hist.supplier == 2 && first_hist.buyer == 3 && first_hist.product == 1) ++b_hits;
  }
  // A carries 9 of the 30 total counts, B 1 of 30; their ratio is exactly 9.
  CHECK(b_hits > 0);
  CHECK(static_cast<double>(a_hits) / trials == doctest::Approx(9.0 / 30.0).epsilon(0.12));
  const double ratio = static_cast<double>(a_hits) / static_cast<double>(b_hits);
  CHECK(ratio > 6.5);
  CHECK(ratio < 12.5);
}

TEST_CASE("single alternative supplier forces fallback swaps") {
  Dataset d;
  d.n_firms = 10;
  d.n_products = 8;
  // Suppliers {0, 1} only; buyers {2..9}; products {0..7}.
  for (int t = 0; t < 8; ++t) {
    d.transactions.push_back({t, 0, static_cast<FirmId>(2 + t), static_cast<ProductId>(t), 1.0});
    d.transactions.push_back({t, 1, static_cast<FirmId>(9 - t), static_cast<ProductId>((t + 3) % 8), 1.0});
  }
  std::sort(d.transactions.begin(), d.transactions.end(), txn_key_less);
  NegativeSampler sampler(d, d.transactions);
  Rng rng(3);
  const auto set = sampler.sample({8, 0, 2, 0, 1.0}, rng);
  REQUIRE(set.negatives.size() == 18);
  std::size_t supplier_swaps = 0;
  for (const Negative& n : set.negatives)
    if (n.provenance == NegProvenance::SupplierSwap) ++supplier_swaps;
  // Only firm 1 can replace the supplier, so exactly one supplier swap
  // survives distinctness; the other slots fell back to other swap kinds.
  CHECK(supplier_swaps == 1);
  std::set<std::tuple<FirmId, FirmId, ProductId>> seen;
  for (const Negative& n : set.negatives) CHECK(seen.insert({n.supplier, n.buyer, n.product}).second);
}

TEST_CASE("mrr hand examples") {
  // Positive strictly above all 18.
  {
    MrrAccumulator acc;
    std::vector<double> negs(18, 0.1);
    acc.add(0.9, negs);
    CHECK(acc.value() == doctest::Approx(1.0));
  }
  // All 19 tied.
  {
    MrrAccumulator acc;
    std::vector<double> negs(18, 0.5);
    acc.add(0.5, negs);
    CHECK(acc.value() == doctest::Approx(0.1));
  }
  // 4 strictly above, none tied.
  {
    MrrAccumulator acc;
    std::vector<double> negs(18, 0.2);
    for (int k = 0; k < 4; ++k) negs[k] = 0.8;
    acc.add(0.5, negs);
    CHECK(acc.value() == doctest::Approx(0.2));
  }
  MrrAccumulator empty;
  CHECK_THROWS_AS(empty.value(), ValidationError);
}

TEST_CASE("mrr of iid continuous scores matches the uniform-rank expectation") {
  // With no ties the rank is uniform on 0..18, so E[MRR] = H_19 / 19.
  double h19 = 0.0;
  for (int k = 1; k <= 19; ++k) h19 += 1.0 / k;
  const double expect = h19 / 19.0;

  Rng rng(2024);
  MrrAccumulator acc;
  std::vector<double> negs(18);
  for (int i = 0; i < 100000; ++i) {
    for (double& v : negs) v = rng.uniform();
    acc.add(rng.uniform(), negs);
  }
  CHECK(acc.value() == doctest::Approx(expect).epsilon(0.02));
  CHECK(acc.value() > 0.0);
  CHECK(acc.value() <= 1.0);
}

TEST_CASE("precision at k") {
  const std::vector<ProductId> ranking = {1, 9, 2};
  const std::set<ProductId> relevant = {1, 2};
  CHECK(precision_at_k(ranking, relevant, 2) == doctest::Approx(0.5));
  CHECK(precision_at_k(ranking, relevant, 1) == doctest::Approx(1.0));
  CHECK(precision_at_k(ranking, {}, 3) == 0.0);
  CHECK_THROWS_AS(precision_at_k(ranking, relevant, 0), ValidationError);
  CHECK_THROWS_AS(precision_at_k(ranking, relevant, 4), ValidationError);
}

TEST_CASE("average precision hand examples") {
  // parts {B=1, C=2}, ranking [B, X, C]: (1 + 2/3) / 2.
  CHECK(*average_precision(std::vector<ProductId>{1, 9, 2}, {1, 2}) ==
        doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
  CHECK(*average_precision(std::vector<ProductId>{1, 2, 9}, {1, 2}) == doctest::Approx(1.0));
  CHECK(*average_precision(std::vector<ProductId>{9, 8, 7, 6, 1}, {1}) == doctest::Approx(0.2));
  CHECK(!average_precision(std::vector<ProductId>{1, 2}, {}).has_value());
}

TEST_CASE("average precision equals the precision_at_k oracle on all small rankings") {
  std::vector<ProductId> perm = {0, 1, 2, 3, 4};
  do {
    for (std::uint32_t mask = 1; mask < 32; ++mask) {
      std::set<ProductId> relevant;
      for (ProductId p = 0; p < 5; ++p)
        if (mask & (1u << p)) relevant.insert(p);
      double oracle = 0.0;
      for (std::size_t k = 0; k < perm.size(); ++k)
        if (relevant.count(perm[k])) oracle += precision_at_k(perm, relevant, k + 1);
      oracle /= static_cast<double>(relevant.size());
      CHECK(*average_precision(perm, relevant) == doctest::Approx(oracle));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("amount scaler") {
  std::vector<Transaction> train = {{0, 0, 1, 0, 1.0},
                                    {1, 0, 1, 0, std::exp(2.0)},
                                    {2, 0, 1, 0, std::exp(4.0)}};
  const auto s = AmountScaler::fit(train);
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.std == doctest::Approx(std::sqrt(8.0 / 3.0)));
  CHECK(s.scale(1.0) == doctest::Approx(-1.2247448714));
  CHECK(s.scale(std::exp(2.0)) == doctest::Approx(0.0));
  CHECK(s.scale(std::exp(4.0)) == doctest::Approx(1.2247448714));
  CHECK(s.unscale(s.scale(7.5)) == doctest::Approx(7.5));
  CHECK_THROWS_AS(s.scale(0.0), ValidationError);
  CHECK_THROWS_AS(s.scale(-3.0), ValidationError);

  std::vector<Transaction> constant = {{0, 0, 1, 0, 5.0}, {1, 0, 1, 0, 5.0}};
  const auto s0 = AmountScaler::fit(constant);
  CHECK(s0.std == 0.0);
  CHECK(s0.scale(5.0) == 0.0);
  CHECK(s0.scale(123.0) == 0.0);
  CHECK(s0.unscale(0.0) == doctest::Approx(5.0));

  std::vector<Transaction> bad = {{0, 0, 1, 0, 0.0}};
  CHECK_THROWS_AS(AmountScaler::fit(bad), ValidationError);
  CHECK_THROWS_AS(AmountScaler::fit(std::vector<Transaction>{}), ValidationError);
}

TEST_CASE("rmse") {
  const std::vector<double> a = {1.0, 2.0, 3.0};
  CHECK(rmse(a, a) == 0.0);
  const std::vector<double> b = {2.0, 3.0, 4.0};
  CHECK(rmse(a, b) == doctest::Approx(1.0));
  CHECK_THROWS_AS(rmse(a, std::vector<double>{1.0}), ValidationError);
  CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), ValidationError);
}

TEST_CASE("mean_of") {
  CHECK(mean_of({1.0, 2.0, 3.0}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(mean_of({}), ValidationError);
}
