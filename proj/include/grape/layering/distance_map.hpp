#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "grape/kg/adjacency_index.hpp"

namespace grape::layering {

using kg::AdjacencyIndex;
using kg::EntityId;
using kg::RelationId;
using kg::Triple;
using kg::TripleId;

/// Augmented triples hidden from one query's message-passing graph (anti-leakage).
class EdgeFilter {
 public:
  EdgeFilter() = default;
  explicit EdgeFilter(std::vector<TripleId> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  }
  bool excludes(TripleId id) const {
    if (ids_.empty()) return false;
    return std::binary_search(ids_.begin(), ids_.end(), id);
  }
  bool empty() const noexcept { return ids_.empty(); }
  const std::vector<TripleId>& ids() const noexcept { return ids_; }

 private:
  std::vector<TripleId> ids_;
};

/// Hop distances from a query entity, capped at the horizon L.
class DistanceMap {
 public:
  static constexpr std::int32_t kUnreached = -1;

  DistanceMap() = default;
  DistanceMap(EntityId query, int horizon, std::size_t num_entities)
      : query_(query), horizon_(horizon), gamma_(num_entities, kUnreached), layers_(horizon + 1) {}

  EntityId query() const noexcept { return query_; }
  int horizon() const noexcept { return horizon_; }

  std::optional<int> gamma(EntityId e) const {
    if (e >= gamma_.size() || gamma_[e] == kUnreached) return std::nullopt;
    return gamma_[e];
  }
  bool reached(EntityId e) const { return e < gamma_.size() && gamma_[e] != kUnreached; }
  /// Raw distance or kUnreached; cheaper than gamma() in hot loops.
  std::int32_t raw(EntityId e) const { return gamma_[e]; }

  /// N_q^l: entities at exactly l hops.
  const std::vector<EntityId>& layer(int l) const {
    if (l < 0 || l > horizon_)
      throw std::out_of_range("layer " + std::to_string(l) + " outside [0, " + std::to_string(horizon_) + "]");
    return layers_[static_cast<std::size_t>(l)];
  }

  /// All reached entities in BFS order (by distance, then discovery).
  std::vector<EntityId> reached_entities() const {
    std::vector<EntityId> out;
    for (const auto& l : layers_) out.insert(out.end(), l.begin(), l.end());
    return out;
  }
  std::size_t reached_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.size();
    return n;
  }
  std::size_t num_entities() const noexcept { return gamma_.size(); }

 private:
  friend DistanceMap relative_distances(const AdjacencyIndex&, EntityId, int, const EdgeFilter&);

  EntityId query_ = 0;
  int horizon_ = 0;
  std::vector<std::int32_t> gamma_;
  std::vector<std::vector<EntityId>> layers_;
};

/// Breadth-first distances over augmented triples; layer l is built from the 1-hop
/// neighbours of layer l-1. Identity loops never change a distance.
inline DistanceMap relative_distances(const AdjacencyIndex& index, EntityId q, int L,
                                      const EdgeFilter& filter = {}) {
  if (L < 1) throw std::invalid_argument("horizon L must be >= 1");
  if (q >= index.num_entities()) throw std::out_of_range("query entity out of range");
  DistanceMap dm(q, L, index.num_entities());
  dm.gamma_[q] = 0;
  dm.layers_[0].push_back(q);
  for (int l = 1; l <= L; ++l) {
    auto& next = dm.layers_[static_cast<std::size_t>(l)];
    for (EntityId h : dm.layers_[static_cast<std::size_t>(l - 1)]) {
      for (const auto& e : index.out(h)) {
        if (dm.gamma_[e.tail] != DistanceMap::kUnreached) continue;
        if (filter.excludes(e.triple)) continue;
        dm.gamma_[e.tail] = l;
        next.push_back(e.tail);
      }
    }
    if (next.empty()) break;
  }
  return dm;
}

/// N_q^l as a list; l must lie in [0, L].
inline std::vector<EntityId> layer_entities(const DistanceMap& dm, int l) { return dm.layer(l); }

}  // namespace grape::layering
