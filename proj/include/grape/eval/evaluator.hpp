#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "grape/eval/ranking.hpp"
#include "grape/kg/dataset.hpp"
#include "grape/model/grape_model.hpp"
#include "grape/train/sampler.hpp"

namespace grape::eval {

struct EvalConfig {
  std::size_t batch_size = 16;
  unsigned threads = 1;
  /// Evaluate only the first n queries (0 = all).
  std::size_t max_queries = 0;
  std::optional<std::filesystem::path> per_query_csv;
};

struct MetricsReport {
  double mrr = 0;
  double mean_rank = 0;
  std::map<int, double> hits;
  std::size_t query_count = 0;
  std::size_t unreachable_count = 0;
  std::uint64_t seed = 0;
  double seconds = 0;
  nlohmann::json config;
  std::vector<double> ranks;
};

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json hits;
  for (auto [k, v] : r.hits) hits["hits@" + std::to_string(k)] = v;
  return {{"mrr", r.mrr},
          {"mean_rank", r.mean_rank},
          {"hits", hits},
          {"query_count", r.query_count},
          {"unreachable_count", r.unreachable_count},
          {"seed", r.seed},
          {"seconds", r.seconds},
          {"config", r.config}};
}

/// Ranks every query against all entities of the fact graph. Candidates outside the query's
/// L-hop neighborhood score -inf; an unreachable answer gets the pessimistic rank |E|.
template <std::floating_point T>
MetricsReport evaluate(model::GrapeModel<T>& net, const kg::FactGraph& facts, std::vector<layering::Query> queries,
                       const FilterIndex& filter, const EvalConfig& cfg = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.max_queries && queries.size() > cfg.max_queries) queries.resize(cfg.max_queries);
  for (const auto& q : queries)
    if (q.r_q >= net.num_relations() - 1)
      throw std::invalid_argument("query relation id out of the model's relation range");
  const double num_entities = static_cast<double>(facts.graph.num_entities());
  MetricsReport rep;
  rep.ranks.resize(queries.size());
  std::vector<char> reached(queries.size(), 0);
  const layering::SubgraphOptions opts{.include_same_potential = net.config().include_same_potential};
  const std::size_t B = std::max<std::size_t>(cfg.batch_size, 1);
  std::vector<EntityId> ents;
  std::vector<double> sc;
  for (std::size_t lo = 0; lo < queries.size(); lo += B) {
    const std::size_t hi = std::min(queries.size(), lo + B);
    std::vector<layering::Query> batch(queries.begin() + static_cast<std::ptrdiff_t>(lo),
                                       queries.begin() + static_cast<std::ptrdiff_t>(hi));
    auto bg = train::build_batch(facts.index, batch, net.config().L, opts, nullptr, cfg.threads);
    ad::Tape<T> tape(false);
    auto out = net.forward(tape, bg);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      if (bg.answer_node[b] < 0) {
        rep.ranks[lo + b] = num_entities;
        continue;
      }
      reached[lo + b] = 1;
      const auto n0 = static_cast<std::size_t>(bg.query_offset[b]), n1 = static_cast<std::size_t>(bg.query_offset[b + 1]);
      ents.assign(bg.node_entity.begin() + static_cast<std::ptrdiff_t>(n0), bg.node_entity.begin() + static_cast<std::ptrdiff_t>(n1));
      sc.resize(n1 - n0);
      for (std::size_t i = n0; i < n1; ++i) sc[i - n0] = static_cast<double>(out.scores.at(i, 0));
      rep.ranks[lo + b] = rank_candidates(ents, sc, batch[b].answer, filter.answers(batch[b].q, batch[b].r_q));
    }
  }
  for (char r : reached) rep.unreachable_count += r == 0;
  const auto s = summarize_ranks(rep.ranks);
  rep.mrr = s.mrr;
  rep.mean_rank = s.mean_rank;
  rep.hits = s.hits;
  rep.query_count = queries.size();
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.config = {{"model", model::to_json(net.config())}, {"batch_size", B}, {"threads", cfg.threads}};
  if (cfg.per_query_csv) {
    std::ofstream csv(*cfg.per_query_csv);
    csv << "query,relation,answer,rank\n";
    for (std::size_t i = 0; i < queries.size(); ++i)
      csv << queries[i].q << ',' << queries[i].r_q << ',' << queries[i].answer << ',' << rep.ranks[i] << '\n';
  }
  return rep;
}

}  // namespace grape::eval
