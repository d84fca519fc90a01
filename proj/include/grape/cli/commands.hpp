#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "grape/cli/run_config.hpp"
#include "grape/eval/evaluator.hpp"
#include "grape/kg/dataset.hpp"
#include "grape/pathlab/entropy_sim.hpp"
#include "grape/pathlab/fixtures.hpp"
#include "grape/pathlab/principles.hpp"
#include "grape/pathlab/triple_count.hpp"
#include "grape/train/trainer.hpp"
#include "grape/util/parallel.hpp"

namespace grape::cli {

using nlohmann::json;

inline constexpr const char* kToolVersion = "grape-cli/1";

inline void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

/// Manifest written into every output directory.
inline json make_manifest(const std::string& command, const json& config, std::uint64_t seed, unsigned threads) {
  return {{"tool", kToolVersion}, {"command", command}, {"config", config}, {"seed", seed}, {"threads", threads}};
}

inline void write_manifest(const std::filesystem::path& dir, const json& manifest) {
  write_json(dir / "manifest.json", manifest);
}

inline kg::Dataset load(const RunConfig& cfg) { return kg::load_dataset(cfg.dataset_paths(), cfg.dataset_options()); }

/// Query entities sampled from a triple list: both directions, shuffled with `seed`,
/// truncated to `n` (0 = all).
inline std::vector<layering::Query> sample_queries(const std::vector<kg::Triple>& triples, std::size_t num_base_relations,
                                                   std::size_t n, std::uint64_t seed) {
  auto qs = train::evaluation_queries(triples, num_base_relations);
  if (n && n < qs.size()) {
    std::mt19937_64 rng(seed);
    std::shuffle(qs.begin(), qs.end(), rng);
    qs.resize(n);
  }
  return qs;
}

// ---------------------------------------------------------------------------------------------
// ingest-check

inline json ingest_check(const kg::Dataset& ds) {
  const auto s = kg::stats(ds);
  json checks;
  auto verify = [](const kg::FactGraph& fg) {
    const auto& g = fg.graph;
    const std::size_t T = g.base_triples().size(), E = g.num_entities();
    bool aug_size = g.aug_triples().size() == 2 * T + E;
    bool rel_size = g.num_relations() == 2 * g.num_base_relations() + 1;
    bool reverses = true;
    for (std::size_t i = 0; i < T && reverses; ++i) {
      const auto& t = g.base_triples()[i];
      const auto& r = g.aug_triples()[g.reverse_triple_id(static_cast<kg::TripleId>(i))];
      reverses = r.head == t.tail && r.tail == t.head && r.rel == g.reverse_of(t.rel);
    }
    std::size_t covered = 0;
    bool index_ok = true;
    for (kg::EntityId e = 0; e < E; ++e) {
      covered += fg.index.out(e).size();
      for (const auto& o : fg.index.out(e)) index_ok = index_ok && g.aug_triples()[o.triple].head == e;
    }
    index_ok = index_ok && covered == g.aug_triples().size();
    return json{{"augmented_size", aug_size}, {"relation_vocabulary", rel_size}, {"reverse_per_base", reverses},
                {"index_complete", index_ok}, {"ok", aug_size && rel_size && reverses && index_ok}};
  };
  checks["train_graph"] = verify(ds.train);
  if (ds.kind == kg::TaskKind::inductive) checks["test_graph"] = verify(ds.test);
  bool ok = checks["train_graph"]["ok"].get<bool>() &&
            (!checks.contains("test_graph") || checks["test_graph"]["ok"].get<bool>());
  return {{"dataset", ds.name},
          {"kind", kg::to_string(ds.kind)},
          {"entities", s.entities},
          {"base_relations", s.base_relations},
          {"train", s.train},
          {"valid", s.valid},
          {"test", s.test},
          {"augmented", s.augmented},
          {"test_graph_entities", s.test_graph_entities},
          {"test_graph_facts", s.test_graph_facts},
          {"checks", checks},
          {"ok", ok}};
}

// ---------------------------------------------------------------------------------------------
// count-triples

inline json to_json(const pathlab::TripleCountReport& r) {
  return {{"query", r.query},         {"L", r.L},
          {"layers", r.percolation_per_layer}, {"hop_counts", r.hop_counts},
          {"neighborhood", r.neighborhood},    {"grape", r.grape},
          {"redgnn", r.redgnn},       {"nbfnet", r.nbfnet},
          {"grail_lower_bound", r.grail_lower_bound}, {"ordered", r.ordered()}};
}

struct CountTriplesResult {
  pathlab::TripleCountSummary summary;
  std::vector<pathlab::TripleCountReport> reports;
};

/// Counts over validation queries on the training fact graph.
inline CountTriplesResult count_validation_triples(const kg::Dataset& ds, int L, std::size_t sample, std::uint64_t seed,
                                                   unsigned threads, pathlab::CountOptions opts = {}) {
  const auto qs = sample_queries(ds.valid, ds.train.graph.num_base_relations(), sample, seed);
  CountTriplesResult res;
  res.reports.resize(qs.size());
  util::parallel_for(qs.size(), threads,
                     [&](std::size_t i) { res.reports[i] = pathlab::count_triples(ds.train.index, qs[i].q, L, opts); });
  res.summary = pathlab::summarize(res.reports);
  return res;
}

inline json to_json(const pathlab::TripleCountSummary& s) {
  return {{"queries", s.queries},
          {"mean", {{"grape", s.grape}, {"redgnn", s.redgnn}, {"nbfnet", s.nbfnet},
                    {"grail_lower_bound", s.grail_lower_bound}, {"neighborhood", s.neighborhood}}},
          {"ordered_queries", s.ordered},
          {"ordered_fraction", s.ordered_fraction()},
          {"grail_is_lower_bound", true}};
}

// ---------------------------------------------------------------------------------------------
// analyze-paths

struct PathStats {
  std::size_t queries = 0, targets = 0, paths = 0, shortest = 0, redundant = 0, valid = 0, valid_redundant = 0;
  std::size_t principle_failures = 0, skipped = 0;
  std::vector<json> failures;
};

/// Principles check plus path classification counts for each query entity.
inline PathStats analyze_paths(const kg::AdjacencyIndex& index, const std::vector<kg::EntityId>& queries, int L,
                               layering::SubgraphOptions opts = {}, pathlab::PathOptions popts = {}) {
  PathStats st;
  for (const auto q : queries) {
    ++st.queries;
    try {
      const auto rep = pathlab::verify_percolation_principles(index, q, L, opts, popts);
      if (!rep.passed()) {
        ++st.principle_failures;
        if (st.failures.size() < 16) st.failures.push_back({{"query", q}, {"counterexamples", rep.counterexamples}});
      }
      const auto dm = layering::relative_distances(index, q, L);
      for (const auto t : dm.reached_entities()) {
        const int g = dm.raw(t);
        const int max_len = std::min({g + 2, L, pathlab::PathOptions::kMaxLength});
        if (max_len < g) continue;
        const auto shortest = pathlab::shortest_paths(index, dm, t);
        ++st.targets;
        for (const auto& p : pathlab::enumerate_paths(index, q, t, max_len, popts)) {
          const auto c = pathlab::classify(p, dm, shortest);
          ++st.paths;
          st.shortest += c.is_shortest;
          st.redundant += c.is_redundant;
          st.valid += c.is_percolation_valid;
          st.valid_redundant += c.is_percolation_valid && c.is_redundant;
        }
      }
    } catch (const pathlab::EnumerationLimit&) {
      ++st.skipped;
    }
  }
  return st;
}

inline json to_json(const PathStats& s) {
  return {{"queries", s.queries},
          {"targets", s.targets},
          {"paths", s.paths},
          {"shortest", s.shortest},
          {"redundant", s.redundant},
          {"percolation_valid", s.valid},
          {"valid_and_redundant", s.valid_redundant},
          {"principle_failures", s.principle_failures},
          {"skipped_enumeration_limit", s.skipped},
          {"failures", s.failures}};
}

// ---------------------------------------------------------------------------------------------
// train / eval

inline json to_json(const train::EpochLog& e) {
  json j{{"epoch", e.epoch}, {"loss", e.loss}, {"val_mrr", e.val_mrr}, {"used", e.used}, {"skipped", e.skipped},
         {"seconds", e.seconds}};
  if (std::isnan(e.loss)) j["loss"] = nullptr;
  if (std::isnan(e.val_mrr)) j["val_mrr"] = nullptr;
  return j;
}

inline eval::MetricsReport evaluate_split(model::GrapeModel<float>& net, const kg::Dataset& ds, const std::string& split,
                                          const std::string& protocol, const RunConfig& cfg,
                                          std::optional<std::filesystem::path> per_query_csv = {}) {
  const auto R = ds.train.graph.num_base_relations();
  if (protocol != "filtered" && protocol != "raw")
    throw ConfigError("protocol", "protocol: expected filtered or raw, got '" + protocol + "'");
  eval::EvalConfig ec;
  ec.batch_size = cfg.train.batch_size;
  ec.threads = cfg.threads;
  ec.per_query_csv = std::move(per_query_csv);
  const kg::FactGraph* facts = nullptr;
  std::vector<layering::Query> qs;
  const std::vector<kg::Triple>* known = nullptr;
  if (split == "valid") {
    facts = &ds.train;
    qs = train::evaluation_queries(ds.valid, R);
    known = &ds.train_known;
    ec.max_queries = cfg.train.max_valid_queries;
  } else if (split == "test") {
    facts = &ds.test;
    qs = train::evaluation_queries(ds.test_queries, R);
    known = &ds.test_known;
  } else {
    throw ConfigError("split", "split: expected valid or test, got '" + split + "'");
  }
  const eval::FilterIndex filter = protocol == "filtered" ? eval::FilterIndex(*known, R) : eval::FilterIndex();
  auto rep = eval::evaluate(net, *facts, std::move(qs), filter, ec);
  rep.seed = cfg.seed;
  rep.config["run"] = cfg.to_json();
  rep.config["split"] = split;
  rep.config["protocol"] = protocol;
  return rep;
}

struct TrainCommandResult {
  std::size_t parameter_count = 0;
  train::TrainResult train;
  eval::MetricsReport test;
};

inline TrainCommandResult train_command(const RunConfig& cfg, const std::function<void(const json&)>& emit) {
  const auto ds = load(cfg);
  model::GrapeModel<float> net(cfg.model, ds.train.graph.num_base_relations());
  net.init(cfg.seed);
  TrainCommandResult res;
  res.parameter_count = net.parameter_count();
  emit({{"event", "model"}, {"parameter_count", res.parameter_count}, {"dataset", ds.name}});
  auto man = make_manifest("train", cfg.to_json(), cfg.seed, cfg.threads);
  man["parameter_count"] = res.parameter_count;
  write_manifest(cfg.out_dir, man);

  train::Trainer<float> trainer(net, ds, cfg.effective_train(), cfg.to_json());
  res.train = trainer.train([&](const train::EpochLog& e) {
    auto j = to_json(e);
    j["event"] = "epoch";
    emit(j);
  });
  if (res.train.best_checkpoint) ad::load_checkpoint(*res.train.best_checkpoint, net.params().store);
  res.test = evaluate_split(net, ds, "test", "filtered", cfg, cfg.out_dir / "test_ranks.csv");
  auto report = eval::to_json(res.test);
  report["best_epoch"] = res.train.best_epoch;
  report["best_val_mrr"] = res.train.best_val_mrr;
  report["parameter_count"] = res.parameter_count;
  report["budget_exhausted"] = res.train.budget_exhausted;
  write_json(cfg.out_dir / "metrics_test.json", report);
  return res;
}

}  // namespace grape::cli
