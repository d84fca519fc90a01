#pragma once

#include <cstddef>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "grape/kg/triple.hpp"
#include "grape/kg/vocabulary.hpp"

namespace grape::kg {

/// Relational multigraph with optional reverse/identity augmentation.
///
/// Augmented layout of `aug_triples()` (T base triples, E entities):
///   [0, T)        base triples, in input order
///   [T, 2T)       reverse triples, (t, r', h) at T + i for base triple i
///   [2T, 2T + E)  identity self-loops, (e, r_id, e) at 2T + e
///
/// Relation ids after augmentation: base r in [0, R), reverse r' = R + r,
/// identity = 2R.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  KnowledgeGraph(Vocabulary entities, Vocabulary relations, std::vector<Triple> base)
      : entities_(std::move(entities)),
        relations_(std::move(relations)),
        base_(std::move(base)),
        num_base_relations_(relations_.size()) {
    std::unordered_set<Triple, TripleHash> seen;
    seen.reserve(base_.size() * 2);
    for (std::size_t i = 0; i < base_.size(); ++i) {
      const Triple& t = base_[i];
      if (t.head >= entities_.size() || t.tail >= entities_.size())
        throw GraphError("triple " + std::to_string(i) + " references an entity outside the vocabulary");
      if (t.rel >= num_base_relations_)
        throw GraphError("triple " + std::to_string(i) + " references a relation outside the vocabulary");
      if (!seen.insert(t).second)
        throw GraphError("duplicate base triple (" + entities_.name(t.head) + ", " +
                         relations_.name(t.rel) + ", " + entities_.name(t.tail) + ")");
    }
  }

  const Vocabulary& entities() const noexcept { return entities_; }
  const Vocabulary& relations() const noexcept { return relations_; }
  const std::vector<Triple>& base_triples() const noexcept { return base_; }
  const std::vector<Triple>& aug_triples() const noexcept { return aug_; }

  bool augmented() const noexcept { return augmented_; }
  std::size_t num_entities() const noexcept { return entities_.size(); }
  std::size_t num_base_relations() const noexcept { return num_base_relations_; }
  /// 2R + 1 once augmented, R otherwise.
  std::size_t num_relations() const noexcept { return relations_.size(); }

  RelationId reverse_of(RelationId r) const {
    require_augmented();
    const auto nb = static_cast<RelationId>(num_base_relations_);
    if (r == identity_relation()) return r;
    return r < nb ? r + nb : r - nb;
  }
  RelationId identity_relation() const {
    require_augmented();
    return static_cast<RelationId>(2 * num_base_relations_);
  }
  bool is_identity(RelationId r) const { return augmented_ && r == identity_relation(); }
  bool is_reverse(RelationId r) const {
    return augmented_ && r >= num_base_relations_ && r < 2 * num_base_relations_;
  }

  TripleId reverse_triple_id(TripleId base_id) const {
    require_augmented();
    return static_cast<TripleId>(base_.size() + base_id);
  }
  TripleId identity_triple_id(EntityId e) const {
    require_augmented();
    return static_cast<TripleId>(2 * base_.size() + e);
  }

  std::string describe(const Triple& t) const {
    return "(" + entities_.name(t.head) + ", " + relations_.name(t.rel) + ", " + entities_.name(t.tail) + ")";
  }

  friend KnowledgeGraph augment(KnowledgeGraph kg);

 private:
  void require_augmented() const {
    if (!augmented_) throw GraphError("operation requires an augmented graph");
  }

  Vocabulary entities_;
  Vocabulary relations_;
  std::vector<Triple> base_;
  std::vector<Triple> aug_;
  std::size_t num_base_relations_ = 0;
  bool augmented_ = false;
};

inline constexpr const char* kReverseSuffix = "_inv";
inline constexpr const char* kIdentityRelationName = "__identity__";

/// Adds one reverse triple per base triple and one identity loop per entity.
inline KnowledgeGraph augment(KnowledgeGraph kg) {
  if (kg.augmented_) throw GraphError("graph is already augmented");
  const std::size_t nb = kg.num_base_relations_;
  Vocabulary rels;
  for (std::size_t r = 0; r < nb; ++r) rels.intern(kg.relations_.name(static_cast<std::uint32_t>(r)));
  for (std::size_t r = 0; r < nb; ++r) {
    const std::string name = kg.relations_.name(static_cast<std::uint32_t>(r)) + kReverseSuffix;
    if (rels.find(name)) throw GraphError("reverse relation name collides with '" + name + "'");
    rels.intern(name);
  }
  if (rels.find(kIdentityRelationName)) throw GraphError("identity relation name collides with a base relation");
  rels.intern(kIdentityRelationName);
  kg.relations_ = std::move(rels);

  const auto nbr = static_cast<RelationId>(nb);
  kg.aug_.clear();
  kg.aug_.reserve(2 * kg.base_.size() + kg.entities_.size());
  kg.aug_.insert(kg.aug_.end(), kg.base_.begin(), kg.base_.end());
  for (const Triple& t : kg.base_) kg.aug_.push_back({t.tail, t.rel + nbr, t.head});
  const auto id_rel = static_cast<RelationId>(2 * nb);
  for (std::size_t e = 0; e < kg.entities_.size(); ++e) {
    const auto ent = static_cast<EntityId>(e);
    kg.aug_.push_back({ent, id_rel, ent});
  }
  kg.augmented_ = true;
  return kg;
}

}  // namespace grape::kg
