#include "sclab/invmodule.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "sclab/rng.hpp"

namespace sclab {

namespace {

inline double relu(double v) { return v > 0.0 ? v : 0.0; }

// Per-timestep supply totals S_i[q]: amount of q supplied by firm i at t.
struct SupplyTotals {
  std::vector<FirmId> active;                   // firms that supplied anything
  std::vector<std::vector<double>> amounts;     // firm x product (dense)
  std::vector<char> is_active;

  SupplyTotals(std::size_t n, std::uint32_t m)
      : amounts(n, std::vector<double>(m, 0.0)), is_active(n, 0) {}

  void add(FirmId i, ProductId q, double amt) {
    if (!is_active[i]) {
      is_active[i] = 1;
      active.push_back(i);
    }
    amounts[i][q] += amt;
  }
};

SupplyTotals supply_totals(std::span<const Transaction> txns, std::size_t n, std::uint32_t m) {
  SupplyTotals s(n, m);
  for (const Transaction& x : txns) s.add(x.supplier, x.product, x.amount);
  return s;
}

}  // namespace

void InvTrainConfig::validate() const {
  if (lambda_debt < 0 || lambda_cons < 0 || lambda_l2 < 0)
    throw ConfigError("lambda hyperparameters must be non-negative");
  if (learning_rate <= 0) throw ConfigError("learning_rate must be positive");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
}

double AttentionWeights::alpha(ProductId p1, ProductId p2) const {
  if (mode == AlphaMode::Direct) return relu(w_raw[p1 * m + p2]);
  double base = 0.0;
  for (std::uint32_t a = 0; a < d; ++a) {
    double acc = 0.0;
    for (std::uint32_t b = 0; b < d; ++b) acc += w_att[a * d + b] * z[p2 * d + b];
    base += z[p1 * d + a] * acc;
  }
  return relu(base + nu[p1 * m + p2]);
}

std::vector<double> AttentionWeights::alpha_matrix() const {
  std::vector<double> out(static_cast<std::size_t>(m) * m, 0.0);
  if (mode == AlphaMode::Direct) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = relu(w_raw[i]);
    return out;
  }
  // zW once, then row dot products.
  std::vector<double> zw(static_cast<std::size_t>(m) * d, 0.0);
  for (std::uint32_t p = 0; p < m; ++p)
    for (std::uint32_t b = 0; b < d; ++b) {
      double acc = 0.0;
      for (std::uint32_t a = 0; a < d; ++a) acc += z[p * d + a] * w_att[a * d + b];
      zw[p * d + b] = acc;
    }
  for (std::uint32_t p1 = 0; p1 < m; ++p1)
    for (std::uint32_t p2 = 0; p2 < m; ++p2) {
      double base = 0.0;
      for (std::uint32_t b = 0; b < d; ++b) base += zw[p1 * d + b] * z[p2 * d + b];
      out[p1 * m + p2] = relu(base + nu[p1 * m + p2]);
    }
  return out;
}

AttentionWeights AttentionWeights::ground_truth(const ProductionGraph& g) {
  AttentionWeights w;
  w.mode = AlphaMode::Direct;
  w.m = g.m();
  w.w_raw.assign(static_cast<std::size_t>(w.m) * w.m, 0.0);
  for (const Product& p : g.products)
    for (const PartSpec& ps : g.parts[p.id])
      w.w_raw[p.id * w.m + ps.part] = static_cast<double>(ps.units);
  return w;
}

std::vector<double> buy_totals(std::span<const Transaction> txns_at_t, FirmId i, std::uint32_t m) {
  std::vector<double> b(m, 0.0);
  for (const Transaction& x : txns_at_t)
    if (x.buyer == i) b[x.product] += x.amount;
  return b;
}

std::vector<double> consumption_totals(std::span<const Transaction> txns_at_t,
                                       const AttentionWeights& alpha, FirmId i, std::uint32_t m) {
  std::vector<double> c(m, 0.0);
  for (const Transaction& x : txns_at_t) {
    if (x.supplier != i) continue;
    for (ProductId p = 0; p < m; ++p) c[p] += alpha.alpha(x.product, p) * x.amount;
  }
  return c;
}

void update_inventory(std::vector<double>& x, const std::vector<double>& b,
                      const std::vector<double>& c) {
  for (std::size_t p = 0; p < x.size(); ++p) x[p] = relu(x[p] + b[p] - c[p]);
}

void advance_inventory(InventoryState& state, std::span<const Transaction> txns_at_t,
                       const AttentionWeights& alpha) {
  const std::uint32_t m = alpha.m;
  const auto a = alpha.alpha_matrix();
  for (const Transaction& x : txns_at_t) {
    if (x.buyer != kConsumer) state.x[x.buyer][x.product] += x.amount;
    auto& inv = state.x[x.supplier];
    for (ProductId p = 0; p < m; ++p) inv[p] -= a[x.product * m + p] * x.amount;
  }
  // Buys and consumption within the step net out before the clamp, matching
  // x(t+1) = max(0, x + b - c).
  for (auto& row : state.x)
    for (double& v : row) v = relu(v);
  ++state.t;
}

double inventory_loss_step(const InventoryState& state, std::span<const Transaction> txns_at_t,
                           const AttentionWeights& alpha, const InvTrainConfig& config) {
  const std::uint32_t m = alpha.m;
  const std::size_t n = state.x.size();
  const auto a = alpha.alpha_matrix();
  const auto sup = supply_totals(txns_at_t, n, m);

  double loss = 0.0;
  for (const FirmId i : sup.active) {
    for (ProductId p = 0; p < m; ++p) {
      double cons = 0.0;
      for (ProductId q = 0; q < m; ++q) {
        const double s = sup.amounts[i][q];
        if (s > 0.0) cons += a[q * m + p] * s;
      }
      loss += config.lambda_debt * relu(cons - state.x[i][p]) - config.lambda_cons * cons;
    }
  }
  loss /= static_cast<double>(n);
  if (alpha.mode == AlphaMode::Bilinear) {
    double fro = 0.0;
    for (const double v : alpha.nu) fro += v * v;
    loss += config.lambda_l2 * std::sqrt(fro);
  }
  return loss;
}

std::vector<double> inventory_loss_grad_wraw(const InventoryState& state,
                                             std::span<const Transaction> txns_at_t,
                                             const AttentionWeights& alpha,
                                             const InvTrainConfig& config) {
  const std::uint32_t m = alpha.m;
  const std::size_t n = state.x.size();
  const auto a = alpha.alpha_matrix();
  const auto sup = supply_totals(txns_at_t, n, m);
  std::vector<double> grad(static_cast<std::size_t>(m) * m, 0.0);

  for (const FirmId i : sup.active) {
    for (ProductId p = 0; p < m; ++p) {
      double cons = 0.0;
      for (ProductId q = 0; q < m; ++q) {
        const double s = sup.amounts[i][q];
        if (s > 0.0) cons += a[q * m + p] * s;
      }
      const double coeff =
          config.lambda_debt * (cons > state.x[i][p] ? 1.0 : 0.0) - config.lambda_cons;
      for (ProductId q = 0; q < m; ++q) {
        const double s = sup.amounts[i][q];
        if (s > 0.0) grad[q * m + p] += coeff * s;
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < grad.size(); ++k)
    grad[k] = alpha.w_raw[k] > 0.0 ? grad[k] * inv_n : 0.0;
  return grad;
}

std::pair<std::uint32_t, std::vector<double>> parse_embeddings(const std::string& path,
                                                               std::uint32_t m) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embeddings file: " + path);
  std::vector<std::vector<double>> rows(m);
  std::uint32_t d = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    ProductId p;
    if (!(ss >> p) || p >= m)
      throw ParseError(path + ":" + std::to_string(lineno) + ": bad product id");
    std::vector<double> v;
    double x;
    while (ss >> x) v.push_back(x);
    if (v.empty()) throw ParseError(path + ":" + std::to_string(lineno) + ": no embedding values");
    if (d == 0) d = static_cast<std::uint32_t>(v.size());
    if (v.size() != d)
      throw ParseError(path + ":" + std::to_string(lineno) + ": inconsistent embedding dimension");
    rows[p] = std::move(v);
  }
  std::vector<double> z(static_cast<std::size_t>(m) * d, 0.0);
  for (ProductId p = 0; p < m; ++p) {
    if (rows[p].empty())
      throw ParseError(path + ": missing embedding for product " + std::to_string(p));
    std::copy(rows[p].begin(), rows[p].end(), z.begin() + static_cast<std::size_t>(p) * d);
  }
  return {d, z};
}

TrainResult train_inventory(const std::vector<Transaction>& train, std::uint32_t m,
                            std::uint32_t n_firms, const InvTrainConfig& config,
                            const std::string& embeddings_path) {
  config.validate();
  if (train.empty()) throw ValidationError("train split is empty");

  AttentionWeights w;
  w.m = m;
  if (embeddings_path.empty()) {
    w.mode = AlphaMode::Direct;
    // Constant 0.1 keeps every weight on the live side of the ReLU at start.
    w.w_raw.assign(static_cast<std::size_t>(m) * m, 0.1);
  } else {
    w.mode = AlphaMode::Bilinear;
    auto [d, z] = parse_embeddings(embeddings_path, m);
    w.d = d;
    w.z = std::move(z);
    Rng init_rng(derive_seed(config.seed, "invmodule.init"));
    w.w_att.resize(static_cast<std::size_t>(d) * d);
    for (double& v : w.w_att) v = init_rng.uniform(-0.05, 0.05);
    // Small positive adjustments keep the pre-activations live like the
    // direct-mode init.
    w.nu.assign(static_cast<std::size_t>(m) * m, 0.1);
  }

  // Group the chronological stream by timestep; one update per timestep.
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  for (std::size_t i = 0; i < train.size();) {
    std::size_t j = i;
    while (j < train.size() && train[j].t == train[i].t) ++j;
    groups.push_back({i, j});
    i = j;
  }

  const std::size_t n = n_firms;
  const std::size_t mm = static_cast<std::size_t>(m) * m;
  const bool unroll = config.gradient_mode == GradMode::FullUnroll;

  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  AttentionWeights best_w = w;  // early stopping restores the best epoch
  int streak = 0;

  // Full-unroll state Jacobian J[i][p*m+q] = d x_i[p] / d alpha_{q p}.
  std::vector<std::vector<double>> jac;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    InventoryState state(n, m);
    if (unroll) jac.assign(n, std::vector<double>(mm, 0.0));
    double epoch_loss = 0.0;

    for (const auto& [lo, hi] : groups) {
      const std::span<const Transaction> txns(train.data() + lo, hi - lo);
      const auto a = w.alpha_matrix();
      const auto sup = supply_totals(txns, n, m);

      // Loss and gradient with respect to alpha.
      std::vector<double> dLdA(mm, 0.0);
      double loss = 0.0;
      for (const FirmId i : sup.active) {
        for (ProductId p = 0; p < m; ++p) {
          double cons = 0.0;
          for (ProductId q = 0; q < m; ++q) {
            const double s = sup.amounts[i][q];
            if (s > 0.0) cons += a[q * m + p] * s;
          }
          const bool debt = cons > state.x[i][p];
          loss += config.lambda_debt * relu(cons - state.x[i][p]) - config.lambda_cons * cons;
          const double coeff = config.lambda_debt * (debt ? 1.0 : 0.0) - config.lambda_cons;
          for (ProductId q = 0; q < m; ++q) {
            const double s = sup.amounts[i][q];
            if (s > 0.0) dLdA[q * m + p] += coeff * s;
            if (unroll && debt) {
              const double j = jac[i][p * m + q];
              if (j != 0.0) dLdA[q * m + p] -= config.lambda_debt * j;
            }
          }
        }
      }
      const double inv_n = 1.0 / static_cast<double>(n);
      loss *= inv_n;
      for (double& g : dLdA) g *= inv_n;

      if (w.mode == AlphaMode::Bilinear) {
        double fro = 0.0;
        for (const double v : w.nu) fro += v * v;
        loss += config.lambda_l2 * std::sqrt(fro);
      }
      if (!std::isfinite(loss))
        throw ValidationError(
            "inventory training diverged (non-finite loss); try a smaller learning_rate");
      epoch_loss += loss;

      // Advance the inventory with the pre-update alpha (the dynamics and the
      // loss see the same weights), updating the Jacobian alongside.
      advance_inventory(state, txns, w);
      if (unroll) {
        for (const FirmId i : sup.active) {
          auto& J = jac[i];
          for (ProductId p = 0; p < m; ++p) {
            if (state.x[i][p] <= 0.0) {
              // Clamped to zero: gradient through this element dies.
              std::fill(J.begin() + static_cast<std::size_t>(p) * m,
                        J.begin() + static_cast<std::size_t>(p) * m + m, 0.0);
              continue;
            }
            for (ProductId q = 0; q < m; ++q) {
              const double s = sup.amounts[i][q];
              if (s > 0.0) J[p * m + q] -= s;
            }
          }
        }
        // Firms that only bought this step: clamp can still kill rows if a
        // prior negative position was zeroed, but buys alone never clamp, so
        // their Jacobians are unchanged.
      }

      // Map dL/dalpha into parameter space and take the subgradient step.
      if (w.mode == AlphaMode::Direct) {
        for (std::size_t k = 0; k < mm; ++k)
          if (w.w_raw[k] > 0.0 && dLdA[k] != 0.0)
            w.w_raw[k] -= config.learning_rate * dLdA[k];
      } else {
        const std::uint32_t d = w.d;
        std::vector<double> g_att(static_cast<std::size_t>(d) * d, 0.0);
        std::vector<double> g_nu(mm, 0.0);
        for (ProductId q = 0; q < m; ++q)
          for (ProductId p = 0; p < m; ++p) {
            const double g = dLdA[q * m + p];
            if (g == 0.0) continue;
            if (a[q * m + p] <= 0.0) continue;  // dead ReLU
            g_nu[q * m + p] += g;
            for (std::uint32_t r = 0; r < d; ++r) {
              const double zq = w.z[q * d + r];
              if (zq == 0.0) continue;
              for (std::uint32_t c = 0; c < d; ++c) g_att[r * d + c] += g * zq * w.z[p * d + c];
            }
          }
        double fro = 0.0;
        for (const double v : w.nu) fro += v * v;
        fro = std::sqrt(fro);
        if (fro > 0.0)
          for (std::size_t k = 0; k < mm; ++k) g_nu[k] += config.lambda_l2 * w.nu[k] / fro;
        for (std::size_t k = 0; k < g_att.size(); ++k) w.w_att[k] -= config.learning_rate * g_att[k];
        for (std::size_t k = 0; k < mm; ++k) w.nu[k] -= config.learning_rate * g_nu[k];
      }
    }

    result.epoch_losses.push_back(epoch_loss);
    result.epochs_run = epoch + 1;
    if (epoch_loss < best - 1e-12) {
      best = epoch_loss;
      best_w = w;
      streak = 0;
    } else if (++streak >= config.patience) {
      break;
    }
  }

  result.weights = std::move(best_w);
  return result;
}

std::vector<std::pair<ProductId, double>> rank_parts(const AttentionWeights& alpha, ProductId p) {
  std::vector<std::pair<ProductId, double>> out;
  out.reserve(alpha.m - 1);
  for (ProductId q = 0; q < alpha.m; ++q) {
    if (q == p) continue;
    out.push_back({q, alpha.alpha(p, q)});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

double penalty(FirmId s, ProductId p, std::int32_t t, const AttentionWeights& alpha,
               const InventoryState& state) {
  if (t != state.t)
    throw ValidationError("penalty requested for t=" + std::to_string(t) +
                          " but inventory state is at t=" + std::to_string(state.t));
  double pen = 0.0;
  for (ProductId q = 0; q < alpha.m; ++q) pen -= relu(alpha.alpha(p, q) - state.x[s][q]);
  return pen;
}

double cap(FirmId s, ProductId p, std::int32_t t, const AttentionWeights& alpha,
           const InventoryState& state) {
  if (t != state.t)
    throw ValidationError("cap requested for t=" + std::to_string(t) +
                          " but inventory state is at t=" + std::to_string(state.t));
  double best = std::numeric_limits<double>::infinity();
  for (ProductId q = 0; q < alpha.m; ++q) {
    const double a = alpha.alpha(p, q);
    if (a > 0.0) best = std::min(best, state.x[s][q] / a);
  }
  return best;
}

void adjust_scores(std::vector<ScoredCandidate>& candidates, const AttentionWeights& alpha,
                   const InventoryState& state, const std::function<double(double)>& scale) {
  for (ScoredCandidate& c : candidates) {
    c.score += penalty(c.txn.supplier, c.txn.product, c.txn.t, alpha, state);
    const double k = cap(c.txn.supplier, c.txn.product, c.txn.t, alpha, state);
    if (std::isfinite(k)) c.predicted_amount = std::min(c.predicted_amount, scale(k));
  }
}

void serialize_alpha(const AttentionWeights& alpha, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "# sclab alpha v1\n" << alpha.m << '\n';
  const auto a = alpha.alpha_matrix();
  for (std::uint32_t p1 = 0; p1 < alpha.m; ++p1) {
    for (std::uint32_t p2 = 0; p2 < alpha.m; ++p2) {
      if (p2) out << ' ';
      out << format_double(a[p1 * alpha.m + p2]);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<double> parse_alpha_matrix(const std::string& path, std::uint32_t* m_out) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open alpha matrix: " + path);
  std::string line;
  std::getline(in, line);  // comment header
  std::uint32_t m = 0;
  if (!(in >> m) || m == 0) throw ParseError(path + ": bad alpha matrix header");
  std::vector<double> a(static_cast<std::size_t>(m) * m);
  for (auto& v : a)
    if (!(in >> v)) throw ParseError(path + ": truncated alpha matrix");
  if (m_out) *m_out = m;
  return a;
}

void write_ranking_report(const AttentionWeights& alpha, std::size_t top_k,
                          const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "# product: part_id=weight ... (top " << top_k << ")\n";
  for (ProductId p = 0; p < alpha.m; ++p) {
    out << p << ':';
    const auto ranked = rank_parts(alpha, p);
    for (std::size_t k = 0; k < std::min(top_k, ranked.size()); ++k)
      out << ' ' << ranked[k].first << '=' << format_double(ranked[k].second);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace sclab
