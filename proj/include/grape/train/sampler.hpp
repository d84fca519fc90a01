#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "grape/kg/dataset.hpp"
#include "grape/layering/batch_graph.hpp"
#include "grape/util/parallel.hpp"

namespace grape::train {

using layering::Query;

/// A query plus the base triple it was derived from (for leakage removal).
struct TrainingQuery {
  Query query;
  kg::TripleId source_triple;
};

/// Both directions of every base triple: (h, r, ?) -> t and (t, r', ?) -> h.
inline std::vector<TrainingQuery> training_queries(const kg::KnowledgeGraph& g) {
  std::vector<TrainingQuery> out;
  const auto& base = g.base_triples();
  out.reserve(2 * base.size());
  const auto R = static_cast<kg::RelationId>(g.num_base_relations());
  for (std::size_t i = 0; i < base.size(); ++i) {
    const auto& t = base[i];
    const auto id = static_cast<kg::TripleId>(i);
    out.push_back({{t.head, t.rel, t.tail}, id});
    out.push_back({{t.tail, static_cast<kg::RelationId>(t.rel + R), t.head}, id});
  }
  return out;
}

/// Both directions of held-out triples (not part of the fact graph).
inline std::vector<Query> evaluation_queries(const std::vector<kg::Triple>& triples, std::size_t num_base_relations) {
  std::vector<Query> out;
  out.reserve(2 * triples.size());
  const auto R = static_cast<kg::RelationId>(num_base_relations);
  for (const auto& t : triples) {
    out.push_back({t.head, t.rel, t.tail});
    out.push_back({t.tail, static_cast<kg::RelationId>(t.rel + R), t.head});
  }
  return out;
}

inline void shuffle_queries(std::vector<TrainingQuery>& qs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::shuffle(qs.begin(), qs.end(), rng);
}

/// Triples hidden from a training query's message-passing graph: the source triple and
/// its reverse always; with `direct_dropout`, every non-identity triple joining q and the
/// answer in either direction.
inline layering::EdgeFilter leakage_filter(const kg::FactGraph& fg, const TrainingQuery& tq, bool direct_dropout) {
  std::vector<kg::TripleId> ids{tq.source_triple, fg.graph.reverse_triple_id(tq.source_triple)};
  if (direct_dropout) {
    const auto id_rel = fg.index.identity_relation();
    const auto q = tq.query.q, a = tq.query.answer;
    for (const auto& e : fg.index.out(q))
      if (e.tail == a && e.rel != id_rel) ids.push_back(e.triple);
    for (const auto& e : fg.index.out(a))
      if (e.tail == q && e.rel != id_rel) ids.push_back(e.triple);
  }
  return layering::EdgeFilter(std::move(ids));
}

/// Builds per-query subgraphs (in parallel) and merges them into one batch.
inline layering::BatchGraph build_batch(const kg::AdjacencyIndex& index, const std::vector<Query>& queries, int L,
                                        layering::SubgraphOptions opts, const std::vector<layering::EdgeFilter>* filters,
                                        unsigned threads) {
  std::vector<layering::LayeredSubgraph> sgs(queries.size());
  util::parallel_for(queries.size(), threads, [&](std::size_t i) {
    static const layering::EdgeFilter none;
    sgs[i] = layering::build_layered_subgraph(index, queries[i].q, L, opts, filters ? (*filters)[i] : none);
  });
  return layering::batch_reindex(queries, sgs, index);
}

}  // namespace grape::train
