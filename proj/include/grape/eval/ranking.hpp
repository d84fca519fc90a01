#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

#include "grape/kg/triple.hpp"

namespace grape::eval {

using kg::EntityId;
using kg::RelationId;

/// Filtered rank with ties resolved by the mean convention: the answer's expected position
/// among its equals under a uniformly random order, 1 + greater + tied / 2.
/// `filtered` must be sorted; those entities are never counted. -inf marks candidates that
/// were not scored.
inline double rank_filtered(std::span<const double> scores, EntityId answer, std::span<const EntityId> filtered = {}) {
  const double sa = scores[answer];
  std::size_t greater = 0, tied = 0;
  for (std::size_t e = 0; e < scores.size(); ++e) {
    if (e == answer) continue;
    if (!filtered.empty() && std::binary_search(filtered.begin(), filtered.end(), static_cast<EntityId>(e))) continue;
    if (scores[e] > sa)
      ++greater;
    else if (scores[e] == sa)
      ++tied;
  }
  return 1.0 + static_cast<double>(greater) + static_cast<double>(tied) / 2.0;
}

/// Same rank as rank_filtered when only `entities` carry finite scores and everything else
/// scores -inf; the answer must be one of `entities`.
inline double rank_candidates(std::span<const EntityId> entities, std::span<const double> scores, EntityId answer,
                              std::span<const EntityId> filtered = {}) {
  double sa = -INFINITY;
  for (std::size_t i = 0; i < entities.size(); ++i)
    if (entities[i] == answer) sa = scores[i];
  std::size_t greater = 0, tied = 0;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    const EntityId e = entities[i];
    if (e == answer) continue;
    if (!filtered.empty() && std::binary_search(filtered.begin(), filtered.end(), e)) continue;
    if (scores[i] > sa)
      ++greater;
    else if (scores[i] == sa)
      ++tied;
  }
  return 1.0 + static_cast<double>(greater) + static_cast<double>(tied) / 2.0;
}

/// Known true answers per (query entity, relation), covering both directions.
class FilterIndex {
 public:
  FilterIndex() = default;
  FilterIndex(const std::vector<kg::Triple>& known, std::size_t num_base_relations) {
    const auto R = static_cast<RelationId>(num_base_relations);
    for (const auto& t : known) {
      map_[key(t.head, t.rel)].push_back(t.tail);
      map_[key(t.tail, t.rel + R)].push_back(t.head);
    }
    for (auto& [k, v] : map_) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
  }

  std::span<const EntityId> answers(EntityId q, RelationId r) const {
    auto it = map_.find(key(q, r));
    if (it == map_.end()) return {};
    return it->second;
  }

 private:
  static std::uint64_t key(EntityId q, RelationId r) { return (static_cast<std::uint64_t>(q) << 32) | r; }
  std::unordered_map<std::uint64_t, std::vector<EntityId>> map_;
};

/// Pairwise (cascade) summation.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t h = xs.size() / 2;
  return pairwise_sum(xs.subspan(0, h)) + pairwise_sum(xs.subspan(h));
}

struct RankSummary {
  double mrr = 0;
  double mean_rank = 0;
  std::map<int, double> hits;
  std::size_t count = 0;
};

inline RankSummary summarize_ranks(std::span<const double> ranks, std::initializer_list<int> ks = {1, 3, 10}) {
  RankSummary s;
  s.count = ranks.size();
  for (int k : ks) s.hits[k] = 0;
  if (ranks.empty()) return s;
  std::vector<double> rr(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) rr[i] = 1.0 / ranks[i];
  const double n = static_cast<double>(ranks.size());
  s.mrr = pairwise_sum(rr) / n;
  s.mean_rank = pairwise_sum(ranks) / n;
  for (int k : ks) {
    std::size_t c = 0;
    for (double r : ranks) c += r <= k;
    s.hits[k] = static_cast<double>(c) / n;
  }
  return s;
}

}  // namespace grape::eval
