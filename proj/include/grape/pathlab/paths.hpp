#pragma once

#include <algorithm>
#include <iterator>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "grape/layering/distance_map.hpp"
#include "grape/layering/layered_subgraph.hpp"

namespace grape::pathlab {

using kg::AdjacencyIndex;
using kg::EntityId;
using kg::RelationId;
using kg::Triple;
using kg::TripleId;
using layering::DistanceMap;
using layering::IndexedTriple;

class EnumerationLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A walk over augmented triples, head of step k equal to tail of step k-1.
struct RelationalPath {
  EntityId source = 0;
  EntityId target = 0;
  std::vector<IndexedTriple> steps;

  std::size_t length() const noexcept { return steps.size(); }
  bool contains(TripleId id) const {
    return std::any_of(steps.begin(), steps.end(), [id](const IndexedTriple& t) { return t.id == id; });
  }
  /// Distinct triple ids, sorted.
  std::vector<TripleId> triple_set() const {
    std::vector<TripleId> ids;
    ids.reserve(steps.size());
    for (const auto& s : steps) ids.push_back(s.id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
  }
  bool well_formed() const {
    if (steps.empty()) return source == target;
    if (steps.front().triple.head != source || steps.back().triple.tail != target) return false;
    for (std::size_t i = 1; i < steps.size(); ++i)
      if (steps[i].triple.head != steps[i - 1].triple.tail) return false;
    return true;
  }
};

struct PathOptions {
  static constexpr int kMaxLength = 6;
  bool include_identity = false;
  /// Refuse to enumerate when more walks than this would be produced.
  std::uint64_t max_paths = 2'000'000;
};

namespace detail {

/// Hop distance to target, following edges backwards.
inline std::vector<int> distance_to(const AdjacencyIndex& index, EntityId target, int cap, bool include_identity) {
  const std::size_t n = index.num_entities();
  std::vector<std::vector<EntityId>> rev(n);
  for (EntityId h = 0; h < n; ++h)
    for (const auto& e : index.out(h))
      if (include_identity || e.rel != index.identity_relation()) rev[e.tail].push_back(h);
  std::vector<int> dist(n, -1);
  std::vector<EntityId> frontier{target};
  dist[target] = 0;
  for (int k = 1; k <= cap && !frontier.empty(); ++k) {
    std::vector<EntityId> next;
    for (EntityId v : frontier)
      for (EntityId u : rev[v])
        if (dist[u] < 0) {
          dist[u] = k;
          next.push_back(u);
        }
    frontier = std::move(next);
  }
  return dist;
}

/// Number of walks q -> target of each length 0..max_len (saturating).
inline std::uint64_t count_walks(const AdjacencyIndex& index, EntityId q, EntityId target, int max_len,
                                 bool include_identity, std::uint64_t cap) {
  const std::size_t n = index.num_entities();
  std::vector<std::uint64_t> cur(n, 0), next(n, 0);
  cur[q] = 1;
  std::uint64_t total = q == target ? 1 : 0;
  for (int k = 1; k <= max_len; ++k) {
    std::fill(next.begin(), next.end(), 0);
    for (EntityId h = 0; h < n; ++h) {
      if (!cur[h]) continue;
      for (const auto& e : index.out(h)) {
        if (!include_identity && e.rel == index.identity_relation()) continue;
        next[e.tail] = std::min(cap + 1, next[e.tail] + cur[h]);
      }
    }
    std::swap(cur, next);
    total = std::min(cap + 1, total + cur[target]);
  }
  return total;
}

}  // namespace detail

/// Every walk from q to target with at most max_len triples.
inline std::vector<RelationalPath> enumerate_paths(const AdjacencyIndex& index, EntityId q, EntityId target,
                                                   int max_len, PathOptions opts = {}) {
  if (max_len < 0 || max_len > PathOptions::kMaxLength)
    throw EnumerationLimit("max_len " + std::to_string(max_len) + " outside [0, 6]; use a smaller max_len");
  if (q >= index.num_entities() || target >= index.num_entities())
    throw std::out_of_range("enumerate_paths: entity out of range");
  const auto walks = detail::count_walks(index, q, target, max_len, opts.include_identity, opts.max_paths);
  if (walks > opts.max_paths)
    throw EnumerationLimit("more than " + std::to_string(opts.max_paths) + " walks of length <= " +
                           std::to_string(max_len) + "; use a smaller max_len");

  const auto to_target = detail::distance_to(index, target, max_len, opts.include_identity);
  std::vector<RelationalPath> out;
  out.reserve(static_cast<std::size_t>(walks));
  RelationalPath cur;
  cur.source = q;
  cur.target = target;
  auto dfs = [&](auto&& self, EntityId at, int budget) -> void {
    if (at == target) out.push_back(cur);
    if (budget == 0) return;
    for (const auto& e : index.out(at)) {
      if (!opts.include_identity && e.rel == index.identity_relation()) continue;
      const int d = to_target[e.tail];
      if (d < 0 || d > budget - 1) continue;
      cur.steps.push_back({e.triple, Triple{at, e.rel, e.tail}});
      self(self, e.tail, budget - 1);
      cur.steps.pop_back();
    }
  };
  if (to_target[q] >= 0) dfs(dfs, q, max_len);
  return out;
}

/// All shortest paths q -> target (walks of length gamma(target)).
inline std::vector<RelationalPath> shortest_paths(const AdjacencyIndex& index, const DistanceMap& dm,
                                                  EntityId target, PathOptions opts = {}) {
  const auto g = dm.gamma(target);
  if (!g) return {};
  auto all = enumerate_paths(index, dm.query(), target, *g, opts);
  std::erase_if(all, [&](const RelationalPath& p) { return static_cast<int>(p.length()) != *g; });
  return all;
}

enum class OverlapMode {
  /// Overlap measured against one shortest path at a time (the best one).
  single_path,
  /// Overlap measured against the union of all shortest-path triples.
  path_union,
};

/// Definition of a redundant path: longer than gamma and sharing at least gamma distinct
/// triples with the shortest paths.
inline bool classify_redundant(const RelationalPath& p, const DistanceMap& dm, const std::vector<RelationalPath>& shortest,
                               OverlapMode mode = OverlapMode::single_path) {
  for (const auto& s : shortest)
    if (s.target != p.target || s.source != p.source)
      throw std::invalid_argument("classify_redundant: shortest path endpoints differ from the path's");
  const auto g = dm.gamma(p.target);
  if (!g) throw std::invalid_argument("classify_redundant: target without distance");
  if (static_cast<int>(p.length()) <= *g) return false;
  const auto mine = p.triple_set();
  auto overlap = [&](const std::vector<TripleId>& other) {
    std::vector<TripleId> both;
    std::set_intersection(mine.begin(), mine.end(), other.begin(), other.end(), std::back_inserter(both));
    return static_cast<int>(both.size());
  };
  if (mode == OverlapMode::path_union) {
    std::vector<TripleId> all;
    for (const auto& s : shortest) {
      auto ids = s.triple_set();
      all.insert(all.end(), ids.begin(), ids.end());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return overlap(all) >= *g;
  }
  int best = 0;
  for (const auto& s : shortest) best = std::max(best, overlap(s.triple_set()));
  return best >= *g;
}

/// Per-triple potential differences: max(dγ, 0) before the last step, min(dγ + 1, 1) on it.
inline std::vector<int> potential_deltas(const RelationalPath& p, const DistanceMap& dm) {
  std::vector<int> out;
  out.reserve(p.length());
  for (std::size_t i = 0; i < p.length(); ++i) {
    const auto& t = p.steps[i].triple;
    const auto gh = dm.gamma(t.head), gt = dm.gamma(t.tail);
    if (!gh || !gt) throw std::invalid_argument("potential_deltas: path entity has no distance");
    const int diff = *gt - *gh;
    out.push_back(i + 1 < p.length() ? std::max(diff, 0) : std::min(diff + 1, 1));
  }
  return out;
}

inline bool is_percolation_valid(const std::vector<int>& deltas) {
  return std::all_of(deltas.begin(), deltas.end(), [](int d) { return d > 0; });
}

struct PathClassification {
  bool is_shortest = false;
  bool is_redundant = false;
  bool is_percolation_valid = false;
  std::vector<int> deltas;
};

inline PathClassification classify(const RelationalPath& p, const DistanceMap& dm,
                                   const std::vector<RelationalPath>& shortest,
                                   OverlapMode mode = OverlapMode::single_path) {
  PathClassification c;
  const auto g = dm.gamma(p.target);
  c.is_shortest = g && static_cast<int>(p.length()) == *g;
  c.is_redundant = classify_redundant(p, dm, shortest, mode);
  c.deltas = potential_deltas(p, dm);
  c.is_percolation_valid = is_percolation_valid(c.deltas);
  return c;
}

}  // namespace grape::pathlab
