#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sclab {

using FirmId = std::uint32_t;
using ProductId = std::uint32_t;

// Reserved buyer id for end-consumer purchases; never appears as supplier.
inline constexpr FirmId kConsumer = std::numeric_limits<FirmId>::max();
inline constexpr const char* kConsumerToken = "CONSUMER";

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One hyperedge: supplier sold `amount` units of `product` to `buyer` at
// timestep `t`.
struct Transaction {
  std::int32_t t = 0;
  FirmId supplier = 0;
  FirmId buyer = 0;
  ProductId product = 0;
  double amount = 0.0;

  friend bool operator==(const Transaction&, const Transaction&) = default;
};

// Total order used everywhere transactions are sorted.
inline bool txn_key_less(const Transaction& a, const Transaction& b) {
  if (a.t != b.t) return a.t < b.t;
  if (a.supplier != b.supplier) return a.supplier < b.supplier;
  if (a.buyer != b.buyer) return a.buyer < b.buyer;
  return a.product < b.product;
}

struct Split {
  std::size_t train_end = 0;
  std::size_t val_end = 0;

  friend bool operator==(const Split&, const Split&) = default;
};

struct Dataset {
  std::vector<Transaction> transactions;
  std::uint32_t n_firms = 0;
  std::uint32_t n_products = 0;
  std::optional<Split> split;

  std::size_t size() const { return transactions.size(); }

  // Views into the sorted transaction list; valid only when split is set.
  std::vector<Transaction> train() const;
  std::vector<Transaction> val() const;
  std::vector<Transaction> test() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Stable-sorts into the canonical (t, supplier, buyer, product) order and
// checks the type invariants. Throws ValidationError on a bad record.
void normalize_dataset(Dataset& d);

Dataset parse_transactions(const std::string& path);
void serialize_transactions(const Dataset& d, const std::string& path);

// Index-based chronological split: train gets floor(train_frac*N), val gets
// the next floor(val_frac*N), the remainder is test.
Dataset chrono_split(const Dataset& d, double train_frac, double val_frac);

// Shortest round-trip decimal text for a double (via std::to_chars).
std::string format_double(double v);

}  // namespace sclab
