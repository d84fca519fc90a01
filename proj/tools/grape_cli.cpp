// grape: command-line front end.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "grape/cli/commands.hpp"

namespace {

using grape::cli::ConfigError;
using grape::cli::RunConfig;
using nlohmann::json;

int fail(const std::string& command, const std::string& message, const std::string& key = {}, int code = 1) {
  json j{{"error", message}, {"command", command}};
  if (!key.empty()) j["key"] = key;
  std::cerr << j.dump() << std::endl;
  return code;
}

/// Turns leftover "--key value" / "--key=value" arguments into config pairs.
std::vector<std::pair<std::string, std::string>> override_pairs(const std::vector<std::string>& rest) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < rest.size(); ++i) {
    const std::string& a = rest[i];
    if (a.rfind("--", 0) != 0) throw ConfigError(a, "unexpected argument '" + a + "'");
    std::string key = a.substr(2);
    if (const auto eq = key.find('='); eq != std::string::npos) {
      out.emplace_back(key.substr(0, eq), key.substr(eq + 1));
      continue;
    }
    if (i + 1 >= rest.size()) throw ConfigError(key, "missing value for --" + key);
    out.emplace_back(key, rest[++i]);
  }
  return out;
}

struct Common {
  std::string preset;
  std::optional<std::string> config_file;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;

  void attach(CLI::App* app) {
    app->add_option("--preset", preset, "dataset preset");
    app->add_option("--config", config_file, "key = value config file");
    app->add_option("--out", out, "output directory");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--threads", threads, "worker threads");
    app->allow_extras();
  }

  RunConfig resolve(CLI::App* app, const std::string& default_out) const {
    auto pairs = override_pairs(app->remaining());
    if (out) pairs.emplace_back("run.out_dir", *out);
    if (seed) pairs.emplace_back("run.seed", std::to_string(*seed));
    if (threads) pairs.emplace_back("run.threads", std::to_string(*threads));
    std::optional<std::filesystem::path> file;
    if (config_file) file = *config_file;
    auto cfg = grape::cli::resolve_config(preset, file, pairs);
    if (!out && cfg.out_dir == "runs") cfg.out_dir = std::filesystem::path("runs") / default_out;
    return cfg;
  }
};

void print(const json& j) { std::cout << j.dump() << std::endl; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relational path reasoning over knowledge graphs"};
  app.require_subcommand(1);

  Common train_opts, eval_opts, analyze_opts, count_opts, ingest_opts;

  auto* train = app.add_subcommand("train", "train a model and evaluate the best checkpoint on test");
  train_opts.attach(train);

  auto* evalc = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_opts.attach(evalc);
  std::string checkpoint, split = "test", protocol = "filtered";
  evalc->add_option("--checkpoint", checkpoint, "checkpoint stem (without .json/.bin)")->required();
  evalc->add_option("--split", split, "valid or test");
  evalc->add_option("--protocol", protocol, "filtered or raw");

  auto* analyze = app.add_subcommand("analyze-paths", "percolation principle checks and path statistics");
  analyze_opts.attach(analyze);
  bool toy = false;
  std::optional<std::string> query_name;
  std::size_t analyze_sample = 20;
  std::optional<int> analyze_L;
  analyze->add_flag("--toy", toy, "use the built-in five-entity graph");
  analyze->add_option("--query", query_name, "query entity name");
  analyze->add_option("--sample", analyze_sample, "number of validation queries");
  analyze->add_option("--L", analyze_L, "horizon (default: preset model.L)");

  auto* count = app.add_subcommand("count-triples", "involved-triple counts per method");
  count_opts.attach(count);
  std::string sample_arg = "all";
  bool per_query = false;
  count->add_option("--sample", sample_arg, "number of validation queries or 'all'");
  count->add_flag("--per-query", per_query, "also write per-query reports");

  auto* entropy = app.add_subcommand("entropy-sim", "transformation error Monte Carlo");
  grape::pathlab::EntropySimConfig sim;
  std::string family = "rotation";
  std::string entropy_out = "runs/entropy-sim";
  entropy->add_option("--family", family, "translation, scaling or rotation");
  entropy->add_option("--d", sim.d, "dimension");
  entropy->add_option("--sigma2", sim.sigma2, "noise variance");
  entropy->add_option("--hops", sim.hops, "hops");
  entropy->add_option("--samples", sim.samples, "Monte Carlo samples");
  entropy->add_option("--seed", sim.seed, "seed");
  entropy->add_option("--threads", sim.threads, "threads");
  entropy->add_option("--m", sim.m, "shortest paths");
  entropy->add_option("--ell", sim.ell, "shortest path length");
  entropy->add_option("--shared-prefix", sim.shared_prefix, "triples shared by all shortest paths");
  entropy->add_option("--alpha", sim.alpha, "extra triples on the redundant path");
  entropy->add_option("--out", entropy_out, "output directory");

  auto* ingest = app.add_subcommand("ingest-check", "load a dataset and verify graph invariants");
  ingest_opts.attach(ingest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("parse", e.what(), {}, 2);
  }

  std::string command = app.get_subcommands().front()->get_name();
  try {
    if (train->parsed()) {
      const auto cfg = train_opts.resolve(train, "train");
      const auto res = grape::cli::train_command(cfg, print);
      print({{"event", "test"}, {"metrics", grape::eval::to_json(res.test)}});
      return 0;
    }

    if (evalc->parsed()) {
      const auto man = grape::ad::read_manifest(checkpoint);
      const auto& meta = man.at("meta");
      auto preset = eval_opts.preset;
      if (preset.empty() && meta.contains("run")) preset = meta["run"].value("preset", "");
      eval_opts.preset = preset;
      auto cfg = eval_opts.resolve(evalc, "eval");
      cfg.model = grape::model::model_config_from_json(meta.at("model"));
      grape::model::GrapeModel<float> net(cfg.model, meta.at("num_base_relations").get<std::size_t>());
      grape::ad::load_checkpoint(checkpoint, net.params().store);
      const auto ds = grape::cli::load(cfg);
      if (ds.train.graph.num_base_relations() != net.num_relations() / 2)
        throw ConfigError("checkpoint", "checkpoint relation count does not match the dataset");
      auto man_out = grape::cli::make_manifest("eval", cfg.to_json(), cfg.seed, cfg.threads);
      man_out["checkpoint"] = checkpoint;
      grape::cli::write_manifest(cfg.out_dir, man_out);
      const auto rep = grape::cli::evaluate_split(net, ds, split, protocol, cfg, cfg.out_dir / ("ranks_" + split + ".csv"));
      auto j = grape::eval::to_json(rep);
      grape::cli::write_json(cfg.out_dir / ("metrics_" + split + ".json"), j);
      print(j);
      return 0;
    }

    if (analyze->parsed()) {
      grape::kg::FactGraph toy_graph;
      const grape::kg::FactGraph* fg = nullptr;
      std::optional<grape::kg::Dataset> ds;
      json config;
      std::filesystem::path out_dir;
      std::uint64_t seed = 1;
      unsigned threads = 1;
      int L = analyze_L.value_or(3);
      std::vector<grape::kg::EntityId> queries;
      if (toy) {
        toy_graph = grape::pathlab::make_toy_graph();
        fg = &toy_graph;
        out_dir = analyze_opts.out.value_or("runs/analyze-paths");
        config = {{"graph", "toy"}, {"L", L}};
        queries.push_back(toy_graph.graph.entities().at(query_name.value_or("A")));
      } else {
        const auto cfg = analyze_opts.resolve(analyze, "analyze-paths");
        L = analyze_L.value_or(cfg.model.L);
        ds = grape::cli::load(cfg);
        fg = &ds->train;
        out_dir = cfg.out_dir;
        config = cfg.to_json();
        config["L"] = L;
        seed = cfg.seed;
        threads = cfg.threads;
        if (query_name) {
          queries.push_back(fg->graph.entities().at(*query_name));
        } else {
          for (const auto& q : grape::cli::sample_queries(ds->valid, fg->graph.num_base_relations(), analyze_sample, seed))
            queries.push_back(q.q);
        }
      }
      config["sample"] = analyze_sample;
      const auto stats = grape::cli::analyze_paths(fg->index, queries, L);
      auto report = grape::cli::to_json(stats);
      report["config"] = config;
      report["seed"] = seed;
      grape::cli::write_manifest(out_dir, grape::cli::make_manifest("analyze-paths", config, seed, threads));
      grape::cli::write_json(out_dir / "paths_report.json", report);
      print(report);
      return stats.principle_failures == 0 ? 0 : 3;
    }

    if (count->parsed()) {
      const auto cfg = count_opts.resolve(count, "count-triples");
      std::size_t n = 0;
      if (sample_arg != "all") {
        try {
          std::size_t pos = 0;
          n = std::stoul(sample_arg, &pos);
          if (pos != sample_arg.size() || n == 0) throw std::invalid_argument(sample_arg);
        } catch (const std::exception&) {
          throw ConfigError("sample", "sample: expected a positive integer or 'all', got '" + sample_arg + "'");
        }
      }
      const auto ds = grape::cli::load(cfg);
      const auto res = grape::cli::count_validation_triples(ds, cfg.model.L, n, cfg.seed, cfg.threads);
      auto report = grape::cli::to_json(res.summary);
      report["config"] = cfg.to_json();
      report["sample"] = sample_arg;
      report["seed"] = cfg.seed;
      report["L"] = cfg.model.L;
      grape::cli::write_manifest(cfg.out_dir, grape::cli::make_manifest("count-triples", cfg.to_json(), cfg.seed, cfg.threads));
      grape::cli::write_json(cfg.out_dir / "triple_counts.json", report);
      if (per_query) {
        std::ofstream os(cfg.out_dir / "triple_counts_per_query.jsonl");
        for (const auto& r : res.reports) os << grape::cli::to_json(r).dump() << '\n';
      }
      print(report);
      return 0;
    }

    if (entropy->parsed()) {
      try {
        sim.family = grape::pathlab::parse_family(family);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("family", e.what());
      }
      if (sim.samples < grape::pathlab::EntropySimConfig::kMinSamples)
        throw ConfigError("samples", "samples: must be >= " + std::to_string(grape::pathlab::EntropySimConfig::kMinSamples));
      const auto rep = grape::pathlab::simulate_error_entropy(sim);
      auto j = grape::pathlab::to_json(rep);
      j["seed"] = sim.seed;
      grape::cli::write_manifest(entropy_out, grape::cli::make_manifest("entropy-sim", j["config"], sim.seed, sim.threads));
      grape::cli::write_json(std::filesystem::path(entropy_out) / "entropy_report.json", j);
      print(j);
      return 0;
    }

    if (ingest->parsed()) {
      const auto cfg = ingest_opts.resolve(ingest, "ingest-check");
      const auto ds = grape::cli::load(cfg);
      auto report = grape::cli::ingest_check(ds);
      report["config"] = cfg.to_json();
      grape::cli::write_manifest(cfg.out_dir, grape::cli::make_manifest("ingest-check", cfg.to_json(), cfg.seed, cfg.threads));
      grape::cli::write_json(cfg.out_dir / "ingest_report.json", report);
      print(report);
      return report["ok"].get<bool>() ? 0 : 3;
    }
  } catch (const ConfigError& e) {
    return fail(command, e.what(), e.key(), 2);
  } catch (const std::exception& e) {
    return fail(command, e.what());
  }
  return 0;
}
