#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "grape/layering/layered_subgraph.hpp"

namespace grape::layering {

struct Query {
  EntityId q;
  RelationId r_q;
  EntityId answer;
};

/// Edges of one message-passing stage, endpoints already reindexed to batch nodes.
/// `targets` lists the nodes updated by the stage; `slot[i]` is the position of dst[i]
/// inside `targets`, so aggregation runs over |targets| rows only.
struct EdgeList {
  std::vector<std::int32_t> src, dst, slot;
  std::vector<RelationId> rel;
  std::vector<std::int32_t> query;  // query slot of each edge (selects r_q)
  std::vector<std::int32_t> targets;

  std::size_t size() const noexcept { return src.size(); }
};

/// Several query subgraphs merged into one disjoint graph. The same entity in two
/// queries is two different nodes.
struct BatchGraph {
  std::vector<Query> queries;
  std::vector<std::int32_t> query_offset;  // nodes of query b: [query_offset[b], query_offset[b+1])
  std::vector<std::int32_t> query_node;
  std::vector<std::int32_t> answer_node;  // -1 when the answer lies outside the L-hop neighborhood

  std::vector<EntityId> node_entity;
  std::vector<std::int32_t> node_query;
  std::vector<std::int32_t> node_distance;
  std::vector<float> node_degree;  // global out-degree over the augmented fact graph

  std::vector<EdgeList> layers;  // layers[l-1] is T'^l
  EdgeList neighborhood;
  double mean_log_degree = 0.0;
  int horizon = 0;

  std::size_t num_nodes() const noexcept { return node_entity.size(); }
  std::size_t num_queries() const noexcept { return queries.size(); }
  std::size_t answer_reachable_count() const {
    std::size_t n = 0;
    for (auto a : answer_node) n += a >= 0;
    return n;
  }
};

inline BatchGraph batch_reindex(const std::vector<Query>& queries, const std::vector<LayeredSubgraph>& subgraphs,
                                const AdjacencyIndex& index) {
  if (queries.size() != subgraphs.size()) throw std::invalid_argument("batch_reindex: one subgraph per query");
  BatchGraph bg;
  bg.queries = queries;
  bg.mean_log_degree = index.mean_log_degree();
  const std::size_t B = queries.size();
  bg.horizon = B ? subgraphs.front().horizon() : 0;
  bg.layers.resize(static_cast<std::size_t>(bg.horizon));
  bg.query_offset.assign(1, 0);

  std::vector<std::int32_t> local(index.num_entities(), -1);
  std::vector<std::int32_t> slot_of(index.num_entities(), -1);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& sg = subgraphs[b];
    if (sg.horizon() != bg.horizon) throw std::invalid_argument("batch_reindex: subgraphs disagree on L");
    if (sg.distances.query() != queries[b].q) throw std::invalid_argument("batch_reindex: subgraph/query mismatch");
    const auto base = static_cast<std::int32_t>(bg.node_entity.size());
    const auto ents = sg.distances.reached_entities();
    for (std::size_t i = 0; i < ents.size(); ++i) {
      const EntityId e = ents[i];
      local[e] = base + static_cast<std::int32_t>(i);
      bg.node_entity.push_back(e);
      bg.node_query.push_back(static_cast<std::int32_t>(b));
      bg.node_distance.push_back(sg.distances.raw(e));
      bg.node_degree.push_back(static_cast<float>(index.global_out_degree(e)));
    }
    bg.query_node.push_back(local[queries[b].q]);
    bg.answer_node.push_back(sg.distances.reached(queries[b].answer) ? local[queries[b].answer] : -1);

    auto append = [&](EdgeList& out, const std::vector<IndexedTriple>& ts) {
      for (const auto& it : ts) {
        out.src.push_back(local[it.triple.head]);
        out.dst.push_back(local[it.triple.tail]);
        out.rel.push_back(it.triple.rel);
        out.query.push_back(static_cast<std::int32_t>(b));
      }
    };
    for (int l = 1; l <= bg.horizon; ++l) {
      auto& el = bg.layers[static_cast<std::size_t>(l - 1)];
      const auto& layer = sg.layers[static_cast<std::size_t>(l - 1)];
      const auto first_slot = static_cast<std::int32_t>(el.targets.size());
      for (std::size_t i = 0; i < layer.entities.size(); ++i) {
        el.targets.push_back(local[layer.entities[i]]);
        slot_of[layer.entities[i]] = first_slot + static_cast<std::int32_t>(i);
      }
      append(el, layer.triples);
      for (const auto& it : layer.triples) el.slot.push_back(slot_of[it.triple.tail]);
      for (EntityId e : layer.entities) slot_of[e] = -1;
    }
    const std::size_t nb_before = bg.neighborhood.size();
    append(bg.neighborhood, sg.neighborhood);
    for (std::size_t i = nb_before; i < bg.neighborhood.size(); ++i) bg.neighborhood.slot.push_back(bg.neighborhood.dst[i]);

    for (EntityId e : ents) local[e] = -1;
    bg.query_offset.push_back(static_cast<std::int32_t>(bg.node_entity.size()));
  }
  bg.neighborhood.targets.resize(bg.node_entity.size());
  for (std::size_t i = 0; i < bg.neighborhood.targets.size(); ++i) bg.neighborhood.targets[i] = static_cast<std::int32_t>(i);
  return bg;
}

}  // namespace grape::layering
