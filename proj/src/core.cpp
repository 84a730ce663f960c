#include "sclab/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sclab {

namespace {

constexpr const char* kHeader = "t,supplier,buyer,product,amount";

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

template <typename T>
bool parse_num(const std::string& s, T& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<Transaction> Dataset::train() const {
  if (!split) throw ValidationError("dataset has no split");
  return {transactions.begin(), transactions.begin() + static_cast<std::ptrdiff_t>(split->train_end)};
}

std::vector<Transaction> Dataset::val() const {
  if (!split) throw ValidationError("dataset has no split");
  return {transactions.begin() + static_cast<std::ptrdiff_t>(split->train_end),
          transactions.begin() + static_cast<std::ptrdiff_t>(split->val_end)};
}

std::vector<Transaction> Dataset::test() const {
  if (!split) throw ValidationError("dataset has no split");
  return {transactions.begin() + static_cast<std::ptrdiff_t>(split->val_end), transactions.end()};
}

void normalize_dataset(Dataset& d) {
  for (const Transaction& x : d.transactions) {
    if (x.amount < 0.0) throw ValidationError("negative transaction amount");
    if (x.supplier == x.buyer) throw ValidationError("supplier equals buyer");
    if (x.supplier == kConsumer) throw ValidationError("consumer sentinel used as supplier");
    if (x.t < 0) throw ValidationError("negative timestep");
  }
  std::stable_sort(d.transactions.begin(), d.transactions.end(), txn_key_less);
}

Dataset parse_transactions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open transactions file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file, expected header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader)
    throw ParseError(path + ":1: bad header, expected '" + std::string(kHeader) + "'");

  Dataset d;
  std::size_t lineno = 1;
  FirmId max_firm = 0;
  ProductId max_product = 0;
  bool any_firm = false, any_product = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (f.size() != 5) throw ParseError(where + ": expected 5 fields, got " + std::to_string(f.size()));

    Transaction x;
    if (!parse_num(f[0], x.t)) throw ParseError(where + ": bad timestep '" + f[0] + "'");
    if (!parse_num(f[1], x.supplier)) throw ParseError(where + ": bad supplier '" + f[1] + "'");
    if (f[2] == kConsumerToken) {
      x.buyer = kConsumer;
    } else if (!parse_num(f[2], x.buyer)) {
      throw ParseError(where + ": bad buyer '" + f[2] + "'");
    }
    if (!parse_num(f[3], x.product)) throw ParseError(where + ": bad product '" + f[3] + "'");
    if (!parse_num(f[4], x.amount)) throw ParseError(where + ": bad amount '" + f[4] + "'");
    if (x.amount < 0.0) throw ValidationError(where + ": negative amount");
    if (x.t < 0) throw ValidationError(where + ": negative timestep");

    d.transactions.push_back(x);
    if (x.supplier != kConsumer) { max_firm = std::max(max_firm, x.supplier); any_firm = true; }
    if (x.buyer != kConsumer) { max_firm = std::max(max_firm, x.buyer); any_firm = true; }
    max_product = std::max(max_product, x.product);
    any_product = true;
  }
  d.n_firms = any_firm ? max_firm + 1 : 0;
  d.n_products = any_product ? max_product + 1 : 0;
  normalize_dataset(d);
  return d;
}

void serialize_transactions(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: LF endings everywhere
  if (!out) throw IoError("cannot open for writing: " + path);
  out << kHeader << '\n';
  for (const Transaction& x : d.transactions) {
    out << x.t << ',' << x.supplier << ',';
    if (x.buyer == kConsumer)
      out << kConsumerToken;
    else
      out << x.buyer;
    out << ',' << x.product << ',' << format_double(x.amount) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

Dataset chrono_split(const Dataset& d, double train_frac, double val_frac) {
  if (d.transactions.empty()) throw ValidationError("cannot split an empty dataset");
  if (train_frac <= 0.0 || val_frac <= 0.0 || train_frac + val_frac >= 1.0)
    throw ConfigError("split fractions must be positive and sum to < 1");
  const double n = static_cast<double>(d.size());
  Dataset out = d;
  Split s;
  s.train_end = static_cast<std::size_t>(std::floor(train_frac * n));
  s.val_end = s.train_end + static_cast<std::size_t>(std::floor(val_frac * n));
  out.split = s;
  return out;
}

}  // namespace sclab
