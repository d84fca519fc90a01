#pragma once

#include <cstddef>
#include <vector>

#include "grape/layering/distance_map.hpp"

namespace grape::layering {

struct IndexedTriple {
  TripleId id;
  Triple triple;
};

/// One percolation layer: E_q^l = N^{l-1} u N^l and T'_q^l, the triples with head in
/// N^{l-1} and tail in E_q^l.
struct PercolationLayer {
  std::vector<EntityId> entities;
  std::vector<IndexedTriple> triples;
};

struct SubgraphOptions {
  /// Keep same-potential triples (tail in N^{l-1}). Identity loops are always kept.
  bool include_same_potential = true;
};

inline PercolationLayer percolation_subgraph(const AdjacencyIndex& index, const DistanceMap& dm, int l,
                                             SubgraphOptions opts = {}, const EdgeFilter& filter = {}) {
  if (l < 1 || l > dm.horizon()) throw std::out_of_range("percolation layer index out of range");
  PercolationLayer out;
  const auto& prev = dm.layer(l - 1);
  const auto& cur = dm.layer(l);
  out.entities.reserve(prev.size() + cur.size());
  out.entities.insert(out.entities.end(), prev.begin(), prev.end());
  out.entities.insert(out.entities.end(), cur.begin(), cur.end());
  const RelationId id_rel = index.identity_relation();
  for (EntityId h : prev) {
    for (const auto& e : index.out(h)) {
      const std::int32_t g = dm.raw(e.tail);
      if (g != l && g != l - 1) continue;
      if (g == l - 1 && !opts.include_same_potential && e.rel != id_rel) continue;
      if (filter.excludes(e.triple)) continue;
      out.triples.push_back({e.triple, Triple{h, e.rel, e.tail}});
    }
  }
  return out;
}

/// Per-query structure consumed by the encoder (layers) and the decoder (neighborhood).
struct LayeredSubgraph {
  DistanceMap distances;
  std::vector<PercolationLayer> layers;  // layers[l-1] holds layer l, l in [1, L]
  /// Every triple of the L-hop neighborhood G_q (both endpoints within L hops).
  std::vector<IndexedTriple> neighborhood;

  int horizon() const noexcept { return distances.horizon(); }
};

inline std::vector<IndexedTriple> neighborhood_triples(const AdjacencyIndex& index, const DistanceMap& dm,
                                                       const EdgeFilter& filter = {}) {
  std::vector<IndexedTriple> out;
  for (int l = 0; l <= dm.horizon(); ++l) {
    for (EntityId h : dm.layer(l)) {
      for (const auto& e : index.out(h)) {
        if (!dm.reached(e.tail) || filter.excludes(e.triple)) continue;
        out.push_back({e.triple, Triple{h, e.rel, e.tail}});
      }
    }
  }
  return out;
}

inline LayeredSubgraph build_layered_subgraph(const AdjacencyIndex& index, EntityId q, int L,
                                              SubgraphOptions opts = {}, const EdgeFilter& filter = {}) {
  LayeredSubgraph sg;
  sg.distances = relative_distances(index, q, L, filter);
  sg.layers.reserve(static_cast<std::size_t>(L));
  for (int l = 1; l <= L; ++l) sg.layers.push_back(percolation_subgraph(index, sg.distances, l, opts, filter));
  sg.neighborhood = neighborhood_triples(index, sg.distances, filter);
  return sg;
}

}  // namespace grape::layering
