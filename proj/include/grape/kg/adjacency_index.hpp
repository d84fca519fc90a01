#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "grape/kg/knowledge_graph.hpp"

namespace grape::kg {

/// One outgoing augmented edge of an entity.
struct OutEdge {
  RelationId rel;
  EntityId tail;
  TripleId triple;  // position in KnowledgeGraph::aug_triples()
};

/// Compressed-sparse-row index of augmented triples grouped by head entity.
/// Immutable after construction.
class AdjacencyIndex {
 public:
  AdjacencyIndex() = default;

  explicit AdjacencyIndex(const KnowledgeGraph& kg) : num_base_relations_(kg.num_base_relations()) {
    if (!kg.augmented()) throw GraphError("adjacency index requires an augmented graph");
    const auto& aug = kg.aug_triples();
    const std::size_t n = kg.num_entities();
    offsets_.assign(n + 1, 0);
    for (const Triple& t : aug) ++offsets_[t.head + 1];
    for (std::size_t e = 0; e < n; ++e) offsets_[e + 1] += offsets_[e];
    edges_.resize(aug.size());
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t i = 0; i < aug.size(); ++i) {
      const Triple& t = aug[i];
      edges_[cursor[t.head]++] = OutEdge{t.rel, t.tail, static_cast<TripleId>(i)};
    }
    degree_.resize(n);
    double log_sum = 0.0;
    for (std::size_t e = 0; e < n; ++e) {
      degree_[e] = offsets_[e + 1] - offsets_[e];
      log_sum += std::log(static_cast<double>(degree_[e]) + 1.0);
    }
    mean_log_degree_ = n ? log_sum / static_cast<double>(n) : 0.0;
    identity_relation_ = static_cast<RelationId>(2 * num_base_relations_);
  }

  std::span<const OutEdge> out(EntityId e) const {
    return {edges_.data() + offsets_[e], edges_.data() + offsets_[e + 1]};
  }
  /// Count of augmented triples with head e (identity loop included).
  std::size_t global_out_degree(EntityId e) const { return degree_[e]; }
  const std::vector<std::size_t>& degrees() const noexcept { return degree_; }
  /// Mean of log(deg + 1) over all entities; used by the PNA degree scalers.
  double mean_log_degree() const noexcept { return mean_log_degree_; }

  std::size_t num_entities() const noexcept { return degree_.size(); }
  std::size_t num_triples() const noexcept { return edges_.size(); }
  std::size_t num_base_relations() const noexcept { return num_base_relations_; }
  RelationId identity_relation() const noexcept { return identity_relation_; }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<OutEdge> edges_;
  std::vector<std::size_t> degree_;
  std::size_t num_base_relations_ = 0;
  RelationId identity_relation_ = 0;
  double mean_log_degree_ = 0.0;
};

inline AdjacencyIndex build_index(const KnowledgeGraph& kg) { return AdjacencyIndex(kg); }

}  // namespace grape::kg
