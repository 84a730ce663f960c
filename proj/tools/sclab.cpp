// sclab: generate synthetic supply-chain data, train the inventory module,
// and evaluate production-function / link-prediction performance.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sclab/ariosim.hpp"
#include "sclab/baselines.hpp"
#include "sclab/eval.hpp"
#include "sclab/invmodule.hpp"
#include "sclab/netstats.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace sclab;

namespace {

constexpr std::uint64_t kDefaultSeed = 14;

std::uint64_t env_or_default_seed() {
  if (const char* env = std::getenv("SCLAB_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("SCLAB_SEED is not a valid integer: ") + env);
    }
  }
  return kDefaultSeed;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

// Values from --config act as defaults; explicit flags win.
template <typename T>
void merge(const json& cfg, const char* key, const CLI::Option* opt, T& var) {
  if (opt->count() == 0 && cfg.contains(key)) var = cfg.at(key).get<T>();
}

void write_manifest(const json& manifest, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << manifest.dump(2) << "\n";
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw IoError("write failed: " + path.string());
}

std::set<ProductId> relevant_parts(const ProductionGraph& g, ProductId p) {
  std::set<ProductId> rel;
  for (const PartSpec& ps : g.parts[p]) rel.insert(ps.part);
  return rel;
}

// MAP over products with ground-truth parts, ranking all other products by
// table score (descending, id tie-break).
double table_map(const PairScoreTable& table, const ProductionGraph& truth) {
  std::vector<double> aps;
  for (ProductId p = 0; p < table.m; ++p) {
    const auto rel = relevant_parts(truth, p);
    if (rel.empty()) continue;
    std::vector<ProductId> ranking;
    for (ProductId q = 0; q < table.m; ++q)
      if (q != p) ranking.push_back(q);
    std::stable_sort(ranking.begin(), ranking.end(), [&](ProductId a, ProductId b) {
      if (table.at(p, a) != table.at(p, b)) return table.at(p, a) > table.at(p, b);
      return a < b;
    });
    aps.push_back(*average_precision(ranking, rel));
  }
  if (aps.empty()) throw ValidationError("no products with ground-truth parts");
  return mean_of(aps);
}

PairScoreTable alpha_as_table(const AttentionWeights& w) {
  PairScoreTable t;
  t.m = w.m;
  t.scores = w.alpha_matrix();
  return t;
}

struct LinkReport {
  double mrr_binary = 0.0, mrr_count = 0.0, mrr_random = 0.0;
  double mrr_binary_inv = 0.0, mrr_count_inv = 0.0;
  double rmse_mean = 0.0, rmse_capped = 0.0;
  std::size_t positives = 0;
  bool with_penalties = false;
};

LinkReport eval_links(const Dataset& data, std::uint64_t seed, bool apply_penalties,
                      const AttentionWeights* weights) {
  const auto train = data.train();
  const auto test = data.test();
  if (test.empty()) throw ValidationError("test split is empty");
  const auto bank = build_edgebank(train);
  const NegativeSampler sampler(data, train);
  const auto scaler = AmountScaler::fit(train);
  Rng neg_rng(derive_seed(seed, "eval.negatives"));
  Rng rand_rng(derive_seed(seed, "eval.random"));

  // Caps below 1 unit scale to a large negative value instead of throwing.
  auto scale_amount = [&](double amount) {
    return amount > 0.0 ? scaler.scale(amount) : -50.0;
  };

  InventoryState state(data.n_firms, data.n_products);
  std::size_t cursor = 0;  // next transaction to feed into the inventory
  auto advance_to = [&](std::int32_t t) {
    while (state.t < t) {
      std::size_t end = cursor;
      while (end < data.transactions.size() && data.transactions[end].t == state.t) ++end;
      advance_inventory(state,
                        std::span<const Transaction>(data.transactions.data() + cursor, end - cursor),
                        *weights);
      cursor = end;
    }
  };

  MrrAccumulator binary, count, random, binary_inv, count_inv;
  std::vector<double> pred_mean, pred_capped, truth_scaled;
  for (const Transaction& pos : test) {
    if (apply_penalties) advance_to(pos.t);
    const auto negs = sampler.sample(pos, neg_rng);

    std::vector<double> b(18), c(18), r(18);
    for (std::size_t k = 0; k < 18; ++k) {
      const auto& n = negs.negatives[k];
      b[k] = bank.score_binary(n.supplier, n.buyer, n.product);
      c[k] = bank.score_count(n.supplier, n.buyer, n.product);
    }
    const double pos_r = rand_rng.uniform();
    for (double& v : r) v = rand_rng.uniform();
    binary.add(bank.score_binary(pos.supplier, pos.buyer, pos.product), b);
    count.add(bank.score_count(pos.supplier, pos.buyer, pos.product), c);
    random.add(pos_r, r);

    truth_scaled.push_back(scaler.scale(pos.amount));
    pred_mean.push_back(0.0);  // train-mean predictor in scaled space

    if (apply_penalties) {
      std::vector<ScoredCandidate> cands;
      cands.push_back({pos, bank.score_binary(pos.supplier, pos.buyer, pos.product), 0.0});
      for (const auto& n : negs.negatives)
        cands.push_back({{pos.t, n.supplier, n.buyer, n.product, 0.0},
                         bank.score_binary(n.supplier, n.buyer, n.product), 0.0});
      auto cands_count = cands;
      for (std::size_t k = 0; k < cands_count.size(); ++k) {
        const auto& txn = cands_count[k].txn;
        cands_count[k].score = bank.score_count(txn.supplier, txn.buyer, txn.product);
      }
      adjust_scores(cands, *weights, state, scale_amount);
      adjust_scores(cands_count, *weights, state, scale_amount);
      std::vector<double> nb(18), nc(18);
      for (std::size_t k = 0; k < 18; ++k) {
        nb[k] = cands[k + 1].score;
        nc[k] = cands_count[k + 1].score;
      }
      binary_inv.add(cands[0].score, nb);
      count_inv.add(cands_count[0].score, nc);
      pred_capped.push_back(std::min(cands[0].predicted_amount, 0.0));
    }
  }

  LinkReport rep;
  rep.positives = binary.count();
  rep.mrr_binary = binary.value();
  rep.mrr_count = count.value();
  rep.mrr_random = random.value();
  rep.rmse_mean = rmse(pred_mean, truth_scaled);
  rep.with_penalties = apply_penalties;
  if (apply_penalties) {
    rep.mrr_binary_inv = binary_inv.value();
    rep.mrr_count_inv = count_inv.value();
    rep.rmse_capped = rmse(pred_capped, truth_scaled);
  }
  return rep;
}

int cmd_generate(const std::string& scenario_name, std::uint64_t seed, const fs::path& out) {
  ProdGenConfig pg;
  pg.seed = seed;
  FirmGenConfig fg;
  fg.seed = seed;
  const Scenario sc = Scenario::preset(scenario_name, seed);

  const auto graph = build_production_graph(pg);
  const auto universe = build_firm_universe(graph, fg);
  std::vector<ShockEvent> shocks;
  const Dataset d = run(graph, universe, sc, &shocks);

  fs::create_directories(out);
  serialize_production_graph(graph, (out / "prodgraph.txt").string());
  serialize_firms(universe, (out / "firms.txt").string());
  serialize_transactions(d, (out / "transactions.csv").string());
  serialize_shock_log(shocks, (out / "shocks.txt").string());

  std::set<FirmId> active_firms;
  std::set<std::int32_t> active_days;
  for (const Transaction& x : d.transactions) {
    active_firms.insert(x.supplier);
    if (x.buyer != kConsumer) active_firms.insert(x.buyer);
    active_days.insert(x.t);
  }
  std::cout << "products " << d.n_products << "\n"
            << "firms " << d.n_firms << "\n"
            << "transacting_firms " << active_firms.size() << "\n"
            << "transactions " << d.transactions.size() << "\n"
            << "active_timesteps " << active_days.size() << "\n"
            << "shocks " << shocks.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sclab: synthetic supply-chain data, inventory-module training, evaluation"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate a synthetic transaction dataset");
  std::string gen_scenario = "std", gen_config, gen_out = "out";
  std::uint64_t gen_seed = 0;
  auto* gen_scenario_opt = gen->add_option("--scenario", gen_scenario, "std|shocks|missing");
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "global seed");
  auto* gen_out_opt = gen->add_option("-o,--out", gen_out, "output directory");
  gen->add_option("--config", gen_config, "JSON config/manifest file");

  // train
  auto* tr = app.add_subcommand("train", "train the inventory module on the train split");
  std::string tr_data = "out/transactions.csv", tr_mode = "direct", tr_emb, tr_grad = "one-step";
  std::string tr_config, tr_out = "out";
  std::uint64_t tr_seed = 0;
  InvTrainConfig tr_cfg;
  auto* tr_data_opt = tr->add_option("--data", tr_data, "transactions file");
  auto* tr_mode_opt = tr->add_option("--mode", tr_mode, "direct|bilinear");
  auto* tr_emb_opt = tr->add_option("--embeddings", tr_emb, "product embeddings (bilinear mode)");
  auto* tr_grad_opt = tr->add_option("--grad", tr_grad, "one-step|full-unroll");
  auto* tr_lr_opt = tr->add_option("--lr", tr_cfg.learning_rate, "learning rate");
  auto* tr_epochs_opt = tr->add_option("--epochs", tr_cfg.epochs, "max epochs");
  auto* tr_patience_opt = tr->add_option("--patience", tr_cfg.patience, "early-stop patience");
  auto* tr_ld_opt = tr->add_option("--lambda-debt", tr_cfg.lambda_debt, "debt hinge weight");
  auto* tr_lc_opt = tr->add_option("--lambda-cons", tr_cfg.lambda_cons, "consumption reward weight");
  auto* tr_l2_opt = tr->add_option("--lambda-l2", tr_cfg.lambda_l2, "nu regularizer weight");
  auto* tr_seed_opt = tr->add_option("--seed", tr_seed, "global seed");
  auto* tr_out_opt = tr->add_option("-o,--out", tr_out, "output directory");
  tr->add_option("--config", tr_config, "JSON config/manifest file");

  // eval-pf
  auto* pf = app.add_subcommand("eval-pf", "production-function MAP vs ground truth");
  std::string pf_weights = "out/alpha.mat", pf_truth = "out/prodgraph.txt";
  std::string pf_data = "out/transactions.csv", pf_config, pf_out = "out";
  std::uint64_t pf_seed = 0;
  auto* pf_weights_opt = pf->add_option("--weights", pf_weights, "trained alpha matrix");
  auto* pf_truth_opt = pf->add_option("--truth", pf_truth, "ground-truth production graph");
  auto* pf_data_opt = pf->add_option("--data", pf_data, "transactions file (for baselines)");
  auto* pf_seed_opt = pf->add_option("--seed", pf_seed, "global seed");
  auto* pf_out_opt = pf->add_option("-o,--out", pf_out, "output directory");
  pf->add_option("--config", pf_config, "JSON config/manifest file");

  // eval-links
  auto* lk = app.add_subcommand("eval-links", "link-existence MRR and amount RMSE on the test split");
  std::string lk_data = "out/transactions.csv", lk_weights, lk_config, lk_out = "out";
  std::uint64_t lk_seed = 0;
  bool lk_pen = false;
  auto* lk_data_opt = lk->add_option("--data", lk_data, "transactions file");
  auto* lk_weights_opt = lk->add_option("--weights", lk_weights, "alpha matrix for penalties");
  auto* lk_pen_opt = lk->add_flag("--apply-penalties", lk_pen, "apply inventory penalties and caps");
  auto* lk_seed_opt = lk->add_option("--seed", lk_seed, "global seed");
  auto* lk_out_opt = lk->add_option("-o,--out", lk_out, "output directory");
  lk->add_option("--config", lk_config, "JSON config/manifest file");

  // stats
  auto* st = app.add_subcommand("stats", "network statistics of the firm-firm graph");
  std::string st_data = "out/transactions.csv", st_firms, st_config, st_out = "out";
  std::uint64_t st_seed = 0;
  auto* st_data_opt = st->add_option("--data", st_data, "transactions file");
  auto* st_firms_opt = st->add_option(
      "--firms", st_firms, "firms file: report on the static supplier graph instead of transactions");
  auto* st_seed_opt = st->add_option("--seed", st_seed, "global seed");
  auto* st_out_opt = st->add_option("-o,--out", st_out, "output directory");
  st->add_option("--config", st_config, "JSON config/manifest file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    auto resolve_seed = [&](const CLI::Option* opt, std::uint64_t flag_value, const json& cfg) {
      if (opt->count() > 0) return flag_value;
      if (cfg.contains("seed")) return cfg.at("seed").get<std::uint64_t>();
      return env_or_default_seed();
    };

    if (gen->parsed()) {
      const json cfg = load_config(gen_config);
      merge(cfg, "scenario", gen_scenario_opt, gen_scenario);
      merge(cfg, "out", gen_out_opt, gen_out);
      gen_seed = resolve_seed(gen_seed_opt, gen_seed, cfg);

      fs::create_directories(gen_out);
      const int rc = cmd_generate(gen_scenario, gen_seed, gen_out);
      json manifest = {{"subcommand", "generate"},
                       {"scenario", gen_scenario},
                       {"seed", gen_seed},
                       {"out", gen_out}};
      write_manifest(manifest, fs::path(gen_out) / "manifest-generate.json");
      return rc;
    }

    if (tr->parsed()) {
      const json cfg = load_config(tr_config);
      merge(cfg, "data", tr_data_opt, tr_data);
      merge(cfg, "mode", tr_mode_opt, tr_mode);
      merge(cfg, "embeddings", tr_emb_opt, tr_emb);
      merge(cfg, "grad", tr_grad_opt, tr_grad);
      merge(cfg, "lr", tr_lr_opt, tr_cfg.learning_rate);
      merge(cfg, "epochs", tr_epochs_opt, tr_cfg.epochs);
      merge(cfg, "patience", tr_patience_opt, tr_cfg.patience);
      merge(cfg, "lambda_debt", tr_ld_opt, tr_cfg.lambda_debt);
      merge(cfg, "lambda_cons", tr_lc_opt, tr_cfg.lambda_cons);
      merge(cfg, "lambda_l2", tr_l2_opt, tr_cfg.lambda_l2);
      merge(cfg, "out", tr_out_opt, tr_out);
      tr_cfg.seed = resolve_seed(tr_seed_opt, tr_seed, cfg);

      if (tr_mode != "direct" && tr_mode != "bilinear")
        throw ConfigError("unknown mode '" + tr_mode + "' (expected direct|bilinear)");
      if (tr_mode == "bilinear" && tr_emb.empty())
        throw ConfigError("bilinear mode requires --embeddings");
      if (tr_mode == "direct") tr_emb.clear();
      if (tr_grad == "one-step")
        tr_cfg.gradient_mode = GradMode::OneStep;
      else if (tr_grad == "full-unroll")
        tr_cfg.gradient_mode = GradMode::FullUnroll;
      else
        throw ConfigError("unknown grad mode '" + tr_grad + "' (expected one-step|full-unroll)");

      Dataset d = parse_transactions(tr_data);
      d = chrono_split(d, 0.7, 0.15);
      const auto result = train_inventory(d.train(), d.n_products, d.n_firms, tr_cfg, tr_emb);

      fs::create_directories(tr_out);
      serialize_alpha(result.weights, (fs::path(tr_out) / "alpha.mat").string());
      std::string log = "# epoch loss\n";
      for (std::size_t e = 0; e < result.epoch_losses.size(); ++e)
        log += std::to_string(e) + " " + format_double(result.epoch_losses[e]) + "\n";
      write_text(fs::path(tr_out) / "train_log.txt", log);
      write_ranking_report(result.weights, 5, (fs::path(tr_out) / "parts_ranking.txt").string());

      json manifest = {{"subcommand", "train"},
                       {"data", tr_data},
                       {"mode", tr_mode},
                       {"embeddings", tr_emb},
                       {"grad", tr_grad},
                       {"lr", tr_cfg.learning_rate},
                       {"epochs", tr_cfg.epochs},
                       {"patience", tr_cfg.patience},
                       {"lambda_debt", tr_cfg.lambda_debt},
                       {"lambda_cons", tr_cfg.lambda_cons},
                       {"lambda_l2", tr_cfg.lambda_l2},
                       {"seed", tr_cfg.seed},
                       {"out", tr_out}};
      write_manifest(manifest, fs::path(tr_out) / "manifest-train.json");
      std::cout << "epochs_run " << result.epochs_run << "\n"
                << "final_loss " << format_double(result.epoch_losses.back()) << "\n";
      return 0;
    }

    if (pf->parsed()) {
      const json cfg = load_config(pf_config);
      merge(cfg, "weights", pf_weights_opt, pf_weights);
      merge(cfg, "truth", pf_truth_opt, pf_truth);
      merge(cfg, "data", pf_data_opt, pf_data);
      merge(cfg, "out", pf_out_opt, pf_out);
      pf_seed = resolve_seed(pf_seed_opt, pf_seed, cfg);

      const auto truth = parse_production_graph(pf_truth);
      AttentionWeights w;
      w.mode = AlphaMode::Direct;
      w.w_raw = parse_alpha_matrix(pf_weights, &w.m);
      if (w.m != truth.m()) throw ValidationError("alpha matrix size does not match truth graph");

      Dataset d = parse_transactions(pf_data);
      d = chrono_split(d, 0.7, 0.15);
      const auto train = d.train();

      const double map_inv = table_map(alpha_as_table(w), truth);
      const double map_corr = table_map(temporal_correlation_scores(train, d.n_products, d.n_firms), truth);
      const double map_pmi = table_map(pmi_scores(train, d.n_products, d.n_firms), truth);
      const double map_rand =
          table_map(random_ranking(d.n_products, derive_seed(pf_seed, "baselines.random")), truth);

      std::string report;
      report += "map_inventory " + format_double(map_inv) + "\n";
      report += "map_temporal_correlation " + format_double(map_corr) + "\n";
      report += "map_pmi " + format_double(map_pmi) + "\n";
      report += "map_random " + format_double(map_rand) + "\n";
      report += "# per-product AP (inventory)\n";
      const auto table = alpha_as_table(w);
      for (ProductId p = 0; p < truth.m(); ++p) {
        const auto rel = relevant_parts(truth, p);
        if (rel.empty()) continue;
        std::vector<ProductId> ranking;
        for (ProductId q = 0; q < truth.m(); ++q)
          if (q != p) ranking.push_back(q);
        std::stable_sort(ranking.begin(), ranking.end(), [&](ProductId a, ProductId b) {
          if (table.at(p, a) != table.at(p, b)) return table.at(p, a) > table.at(p, b);
          return a < b;
        });
        report += "ap " + std::to_string(p) + " " + format_double(*average_precision(ranking, rel)) + "\n";
      }
      fs::create_directories(pf_out);
      write_text(fs::path(pf_out) / "map_report.txt", report);

      json manifest = {{"subcommand", "eval-pf"}, {"weights", pf_weights}, {"truth", pf_truth},
                       {"data", pf_data},         {"seed", pf_seed},       {"out", pf_out}};
      write_manifest(manifest, fs::path(pf_out) / "manifest-eval-pf.json");
      std::cout << report.substr(0, report.find("# per-product"));
      return 0;
    }

    if (lk->parsed()) {
      const json cfg = load_config(lk_config);
      merge(cfg, "data", lk_data_opt, lk_data);
      merge(cfg, "weights", lk_weights_opt, lk_weights);
      merge(cfg, "out", lk_out_opt, lk_out);
      if (lk_pen_opt->count() == 0 && cfg.contains("apply_penalties"))
        lk_pen = cfg.at("apply_penalties").get<bool>();
      lk_seed = resolve_seed(lk_seed_opt, lk_seed, cfg);
      if (lk_pen && lk_weights.empty())
        throw ConfigError("--apply-penalties requires --weights");

      Dataset d = parse_transactions(lk_data);
      d = chrono_split(d, 0.7, 0.15);
      AttentionWeights w;
      if (lk_pen) {
        w.mode = AlphaMode::Direct;
        w.w_raw = parse_alpha_matrix(lk_weights, &w.m);
        if (w.m != d.n_products) throw ValidationError("alpha matrix size does not match dataset");
      }

      const auto rep = eval_links(d, lk_seed, lk_pen, lk_pen ? &w : nullptr);
      std::string report;
      report += "positives " + std::to_string(rep.positives) + "\n";
      report += "mrr_edgebank_binary " + format_double(rep.mrr_binary) + "\n";
      report += "mrr_edgebank_count " + format_double(rep.mrr_count) + "\n";
      report += "mrr_random " + format_double(rep.mrr_random) + "\n";
      report += "rmse_mean_predictor " + format_double(rep.rmse_mean) + "\n";
      if (rep.with_penalties) {
        report += "mrr_edgebank_binary_inv " + format_double(rep.mrr_binary_inv) + "\n";
        report += "mrr_edgebank_count_inv " + format_double(rep.mrr_count_inv) + "\n";
        report += "rmse_capped_predictor " + format_double(rep.rmse_capped) + "\n";
      }
      fs::create_directories(lk_out);
      write_text(fs::path(lk_out) / "links_report.txt", report);

      json manifest = {{"subcommand", "eval-links"},
                       {"data", lk_data},
                       {"weights", lk_weights},
                       {"apply_penalties", lk_pen},
                       {"seed", lk_seed},
                       {"out", lk_out}};
      write_manifest(manifest, fs::path(lk_out) / "manifest-eval-links.json");
      std::cout << report;
      return 0;
    }

    if (st->parsed()) {
      const json cfg = load_config(st_config);
      merge(cfg, "data", st_data_opt, st_data);
      merge(cfg, "firms", st_firms_opt, st_firms);
      merge(cfg, "out", st_out_opt, st_out);
      st_seed = resolve_seed(st_seed_opt, st_seed, cfg);

      FirmGraph graph;
      if (!st_firms.empty()) {
        graph = build_supplier_graph(parse_firms(st_firms));
      } else {
        graph = build_firm_graph(parse_transactions(st_data));
      }
      fs::create_directories(st_out);
      write_stats_report(graph, st_seed, (fs::path(st_out) / "stats_report.txt").string());

      json manifest = {{"subcommand", "stats"},
                       {"data", st_data},
                       {"firms", st_firms},
                       {"seed", st_seed},
                       {"out", st_out}};
      write_manifest(manifest, fs::path(st_out) / "manifest-stats.json");
      std::ifstream in(fs::path(st_out) / "stats_report.txt");
      std::cout << in.rdbuf();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
