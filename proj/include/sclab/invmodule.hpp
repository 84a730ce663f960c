#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sclab/prodgen.hpp"

namespace sclab {

enum class AlphaMode { Direct, Bilinear };
enum class GradMode { OneStep, FullUnroll };

// Learned attention weights alpha_{p1 p2}: how much of p2 is consumed per
// unit of p1 supplied. Direct mode stores the raw m x m matrix; bilinear mode
// derives the base rate from fixed product embeddings and learns W_att plus
// per-pair adjustments nu.
struct AttentionWeights {
  AlphaMode mode = AlphaMode::Direct;
  std::uint32_t m = 0;
  std::vector<double> w_raw;  // m*m, direct mode

  std::uint32_t d = 0;        // embedding dimension, bilinear mode
  std::vector<double> w_att;  // d*d
  std::vector<double> nu;     // m*m adjustments
  std::vector<double> z;      // m*d product embeddings (externally supplied)

  double alpha(ProductId p1, ProductId p2) const;
  std::vector<double> alpha_matrix() const;  // dense m*m, row = supplied product

  // alpha set to the ground-truth unit requirements u.
  static AttentionWeights ground_truth(const ProductionGraph& g);
};

struct InventoryState {
  std::vector<std::vector<double>> x;  // firm x product, >= 0
  std::int32_t t = 0;

  InventoryState() = default;
  InventoryState(std::size_t n_firms, std::uint32_t m) : x(n_firms, std::vector<double>(m, 0.0)) {}
};

struct InvTrainConfig {
  double lambda_debt = 5.0;
  double lambda_cons = 4.0;
  double lambda_l2 = 4.0;
  double learning_rate = 0.001;
  int epochs = 100;
  int patience = 10;
  std::uint64_t seed = 0;
  GradMode gradient_mode = GradMode::OneStep;

  void validate() const;
};

// b_i^(t): per-product amounts bought by firm i at timestep t.
std::vector<double> buy_totals(std::span<const Transaction> txns_at_t, FirmId i, std::uint32_t m);

// c_i^(t): per-product consumption implied by alpha for firm i's supply at t.
std::vector<double> consumption_totals(std::span<const Transaction> txns_at_t,
                                       const AttentionWeights& alpha, FirmId i, std::uint32_t m);

// x <- max(0, x + b - c), elementwise.
void update_inventory(std::vector<double>& x, const std::vector<double>& b,
                      const std::vector<double>& c);

// Advance a whole inventory state by one timestep's transactions.
void advance_inventory(InventoryState& state, std::span<const Transaction> txns_at_t,
                       const AttentionWeights& alpha);

// The timestep loss: (1/n) sum_i [debt hinge - consumption reward] plus the
// Frobenius regularizer on nu (bilinear mode only).
double inventory_loss_step(const InventoryState& state, std::span<const Transaction> txns_at_t,
                           const AttentionWeights& alpha, const InvTrainConfig& config);

// One-step subgradient of inventory_loss_step with respect to w_raw (direct
// mode), flattened m*m. Exposed for the finite-difference check.
std::vector<double> inventory_loss_grad_wraw(const InventoryState& state,
                                             std::span<const Transaction> txns_at_t,
                                             const AttentionWeights& alpha,
                                             const InvTrainConfig& config);

struct TrainResult {
  AttentionWeights weights;
  std::vector<double> epoch_losses;
  int epochs_run = 0;
};

// Subgradient descent over the chronological train stream; one update per
// timestep, inventories reset each epoch, early stop on `patience` epochs
// without improvement. Bilinear mode requires an embeddings file.
TrainResult train_inventory(const std::vector<Transaction>& train, std::uint32_t m,
                            std::uint32_t n_firms, const InvTrainConfig& config,
                            const std::string& embeddings_path = "");

// All products except p, sorted by alpha_{p,.} descending, id tie-break.
std::vector<std::pair<ProductId, double>> rank_parts(const AttentionWeights& alpha, ProductId p);

// pen(s,b,p,t) = -sum_{p'} max(0, alpha_{pp'} - x_s[p']); 0 is "possible".
double penalty(FirmId s, ProductId p, std::int32_t t, const AttentionWeights& alpha,
               const InventoryState& state);

// cap(s,b,p,t) = min over alpha_{pp'} > 0 of x_s[p'] / alpha_{pp'};
// +infinity when the alpha row is all zero.
double cap(FirmId s, ProductId p, std::int32_t t, const AttentionWeights& alpha,
           const InventoryState& state);

struct ScoredCandidate {
  Transaction txn;
  double score = 0.0;             // existence score y-hat
  double predicted_amount = 0.0;  // in scaled space
};

// score += penalty; amount = min(amount, scale(cap)). `scale` maps a raw
// amount into the model's scaled amount space.
void adjust_scores(std::vector<ScoredCandidate>& candidates, const AttentionWeights& alpha,
                   const InventoryState& state, const std::function<double(double)>& scale);

// Embeddings file: one line per product, `product_id v1 ... vd`.
std::pair<std::uint32_t, std::vector<double>> parse_embeddings(const std::string& path,
                                                               std::uint32_t m);

void serialize_alpha(const AttentionWeights& alpha, const std::string& path);
std::vector<double> parse_alpha_matrix(const std::string& path, std::uint32_t* m_out = nullptr);

void write_ranking_report(const AttentionWeights& alpha, std::size_t top_k,
                          const std::string& path);

}  // namespace sclab
