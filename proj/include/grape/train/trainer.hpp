#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "grape/ad/adam.hpp"
#include "grape/ad/checkpoint.hpp"
#include "grape/eval/evaluator.hpp"
#include "grape/kg/dataset.hpp"
#include "grape/model/grape_model.hpp"
#include "grape/train/loss.hpp"
#include "grape/train/sampler.hpp"
#include "grape/util/rng.hpp"

namespace grape::train {

struct TrainConfig {
  std::size_t batch_size = 16;
  int epochs = 20;
  double lr = 5e-4;
  std::uint64_t seed = 1;
  kg::TaskKind kind = kg::TaskKind::inductive;
  bool fb_direct_dropout = false;
  /// Global gradient-norm clip; 0 disables it.
  double clip_norm = 0.0;
  unsigned threads = 1;
  /// Cap on training queries per epoch (0 = every query); for smoke runs.
  std::size_t max_train_queries = 0;
  /// Cap on validation queries per evaluation (0 = all).
  std::size_t max_valid_queries = 0;
  /// Wall-clock budget in seconds (0 = unlimited); checked between batches.
  double time_budget = 0.0;
  std::optional<std::filesystem::path> out_dir;
  bool resume = false;

  void validate() const {
    if (batch_size < 1) throw std::invalid_argument("train.batch_size must be >= 1");
    if (!(lr > 0)) throw std::invalid_argument("train.lr must be > 0");
    if (epochs < 0) throw std::invalid_argument("train.epochs must be >= 0");
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"lr", c.lr},
          {"seed", c.seed},
          {"kind", kg::to_string(c.kind)},
          {"fb_direct_dropout", c.fb_direct_dropout},
          {"clip_norm", c.clip_norm},
          {"threads", c.threads},
          {"max_train_queries", c.max_train_queries},
          {"max_valid_queries", c.max_valid_queries},
          {"time_budget", c.time_budget}};
}

struct EpochLog {
  int epoch = 0;
  double loss = 0;  // mean per used query
  double val_mrr = NAN;
  std::size_t used = 0, skipped = 0;
  double seconds = 0;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  double best_val_mrr = -1;
  int best_epoch = -1;
  std::optional<std::filesystem::path> best_checkpoint;
  bool budget_exhausted = false;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <std::floating_point T>
class Trainer {
 public:
  using Model = model::GrapeModel<T>;

  Trainer(Model& net, const kg::Dataset& data, TrainConfig cfg, nlohmann::json run_config = {})
      : net_(net), data_(data), cfg_(std::move(cfg)), run_config_(std::move(run_config)) {
    cfg_.validate();
    adam_.lr = cfg_.lr;
    valid_filter_ = eval::FilterIndex(data_.train_known, data_.train.graph.num_base_relations());
  }

  /// Runs one epoch over the (shuffled) training queries; returns the epoch record.
  EpochLog run_epoch(int epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    auto queries = training_queries(data_.train.graph);
    shuffle_queries(queries, util::derive_seed(cfg_.seed, static_cast<std::uint64_t>(epoch)));
    if (cfg_.max_train_queries && queries.size() > cfg_.max_train_queries) queries.resize(cfg_.max_train_queries);

    EpochLog log;
    log.epoch = epoch;
    long double loss_sum = 0;
    const layering::SubgraphOptions opts{.include_same_potential = net_.config().include_same_potential};
    for (std::size_t lo = 0; lo < queries.size(); lo += cfg_.batch_size) {
      if (budget_exceeded()) {
        budget_exhausted_ = true;
        break;
      }
      const std::size_t hi = std::min(queries.size(), lo + cfg_.batch_size);
      std::vector<Query> batch;
      std::vector<layering::EdgeFilter> filters;
      for (std::size_t i = lo; i < hi; ++i) {
        batch.push_back(queries[i].query);
        filters.push_back(leakage_filter(data_.train, queries[i], cfg_.fb_direct_dropout));
      }
      auto bg = build_batch(data_.train.index, batch, net_.config().L, opts, &filters, cfg_.threads);
      ad::Tape<T> tape;
      BatchLoss<T> bl;
      try {
        bl = batch_loss(tape, net_.forward(tape, bg).scores, bg);
      } catch (const std::domain_error& e) {  // debug builds check every op for NaN/Inf
        throw TrainingDiverged(std::string(e.what()) + "; " + diagnose(epoch, lo, queries, NAN));
      }
      log.skipped += bl.skipped;
      if (bl.used == 0) continue;
      const double value = static_cast<double>(bl.loss.item());
      if (!std::isfinite(value)) throw TrainingDiverged(diagnose(epoch, lo, queries, value));
      net_.params().store.zero_grad();
      tape.backward(bl.loss);
      if (cfg_.clip_norm > 0) net_.params().store.clip_grad_norm(cfg_.clip_norm);
      try {
        ad::adam_step(net_.params().store, state_, adam_);
      } catch (const ad::NonFiniteGradient& e) {
        throw TrainingDiverged(std::string(e.what()) + "; " + diagnose(epoch, lo, queries, value));
      }
      log.used += bl.used;
      loss_sum += value;
    }
    log.loss = log.used ? static_cast<double>(loss_sum / static_cast<long double>(log.used)) : NAN;
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return log;
  }

  eval::MetricsReport validate() {
    eval::EvalConfig ec;
    ec.batch_size = cfg_.batch_size;
    ec.threads = cfg_.threads;
    ec.max_queries = cfg_.max_valid_queries;
    auto qs = evaluation_queries(data_.valid, data_.train.graph.num_base_relations());
    return eval::evaluate(net_, data_.train, std::move(qs), valid_filter_, ec);
  }

  /// Full loop with per-epoch validation and best/last checkpoints under out_dir.
  TrainResult train(const std::function<void(const EpochLog&)>& on_epoch = {}) {
    TrainResult res;
    int start = 1;
    std::ofstream log_file;
    if (cfg_.out_dir) {
      std::filesystem::create_directories(*cfg_.out_dir);
      if (cfg_.resume && std::filesystem::exists(stem("last").string() + ".json")) {
        auto man = ad::load_checkpoint(stem("last"), net_.params().store, &state_);
        start = man["meta"].value("epoch", 0) + 1;
        res.best_val_mrr = man["meta"].value("best_val_mrr", -1.0);
        res.best_epoch = man["meta"].value("best_epoch", -1);
        if (res.best_epoch > 0) res.best_checkpoint = stem("best");
      }
      log_file.open(*cfg_.out_dir / "train_log.jsonl", cfg_.resume ? std::ios::app : std::ios::trunc);
    }
    started_ = std::chrono::steady_clock::now();
    for (int epoch = start; epoch <= cfg_.epochs; ++epoch) {
      auto log = run_epoch(epoch);
      if (!data_.valid.empty()) log.val_mrr = validate().mrr;
      res.epochs.push_back(log);
      if (!std::isnan(log.val_mrr) && log.val_mrr > res.best_val_mrr) {
        res.best_val_mrr = log.val_mrr;
        res.best_epoch = epoch;
        if (cfg_.out_dir) {
          ad::save_checkpoint(stem("best"), net_.params().store, &state_, meta(epoch, res));
          res.best_checkpoint = stem("best");
        }
      }
      if (cfg_.out_dir) {
        ad::save_checkpoint(stem("last"), net_.params().store, &state_, meta(epoch, res));
        nlohmann::json j{{"epoch", log.epoch},     {"loss", log.loss},       {"val_mrr", log.val_mrr},
                         {"used", log.used},       {"skipped", log.skipped}, {"seconds", log.seconds},
                         {"seed", cfg_.seed},      {"best_val_mrr", res.best_val_mrr}};
        if (std::isnan(log.val_mrr)) j["val_mrr"] = nullptr;
        if (std::isnan(log.loss)) j["loss"] = nullptr;
        log_file << j.dump() << '\n';
        log_file.flush();
      }
      if (on_epoch) on_epoch(log);
      if (budget_exhausted_) {
        res.budget_exhausted = true;
        break;
      }
    }
    return res;
  }

  const ad::AdamState<T>& adam_state() const noexcept { return state_; }

 private:
  std::filesystem::path stem(const char* name) const { return *cfg_.out_dir / (std::string("checkpoint_") + name); }

  nlohmann::json meta(int epoch, const TrainResult& r) const {
    return {{"epoch", epoch},
            {"best_val_mrr", r.best_val_mrr},
            {"best_epoch", r.best_epoch},
            {"model", model::to_json(net_.config())},
            {"train", to_json(cfg_)},
            {"num_base_relations", data_.train.graph.num_base_relations()},
            {"run", run_config_}};
  }

  bool budget_exceeded() const {
    if (cfg_.time_budget <= 0) return false;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count() > cfg_.time_budget;
  }

  std::string diagnose(int epoch, std::size_t lo, const std::vector<TrainingQuery>& qs, double value) const {
    std::ostringstream os;
    os << "non-finite loss " << value << " at epoch " << epoch << ", batch starting at " << lo << "; source triples:";
    for (std::size_t i = lo; i < std::min(qs.size(), lo + cfg_.batch_size); ++i) os << ' ' << qs[i].source_triple;
    os << "; parameter norms:";
    for (const auto& e : net_.params().store.entries()) {
      long double s = 0;
      for (T v : e.tensor.values()) s += static_cast<long double>(v) * v;
      os << ' ' << e.name << '=' << std::sqrt(static_cast<double>(s));
    }
    return os.str();
  }

  Model& net_;
  const kg::Dataset& data_;
  TrainConfig cfg_;
  nlohmann::json run_config_;
  ad::AdamConfig adam_;
  ad::AdamState<T> state_;
  eval::FilterIndex valid_filter_;
  std::chrono::steady_clock::time_point started_ = std::chrono::steady_clock::now();
  bool budget_exhausted_ = false;
};

}  // namespace grape::train
