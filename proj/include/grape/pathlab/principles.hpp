#pragma once

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "grape/kg/dataset.hpp"
#include "grape/pathlab/paths.hpp"

namespace grape::pathlab {

struct PrinciplesReport {
  bool p1_shortest_included = true;
  bool p2_no_redundant = true;
  bool p3_all_facts = true;
  bool no_uphill = true;
  bool layer_embedding = true;
  std::size_t shortest_checked = 0, valid_checked = 0, triples_checked = 0;
  std::vector<std::string> counterexamples;

  bool passed() const { return p1_shortest_included && p2_no_redundant && p3_all_facts && no_uphill && layer_embedding; }
};

namespace detail {
inline std::string show(const RelationalPath& p) {
  std::ostringstream os;
  os << p.source;
  for (const auto& s : p.steps) os << " -[" << s.triple.rel << "]-> " << s.triple.tail;
  return os.str();
}

inline void note(PrinciplesReport& r, std::string what) {
  if (r.counterexamples.size() < 32) r.counterexamples.push_back(std::move(what));
}

inline bool in_layer(const layering::PercolationLayer& layer, TripleId id) {
  return std::any_of(layer.triples.begin(), layer.triples.end(), [id](const IndexedTriple& t) { return t.id == id; });
}
}  // namespace detail

/// Checks the three percolation principles for one query against exhaustive walk enumeration:
/// shortest paths are percolation paths, percolation paths are never redundant, and every
/// non-uphill neighborhood triple is processed by the layer of its head.
inline PrinciplesReport verify_percolation_principles(const AdjacencyIndex& index, EntityId q, int L,
                                                      layering::SubgraphOptions opts = {}, PathOptions popts = {}) {
  PrinciplesReport rep;
  const int horizon = std::max(L, PathOptions::kMaxLength);
  const auto dm = layering::relative_distances(index, q, horizon);
  const auto sg = layering::build_layered_subgraph(index, q, L, opts);

  for (int l = 1; l <= L; ++l)
    for (const auto& t : sg.layers[static_cast<std::size_t>(l - 1)].triples)
      if (dm.raw(t.triple.head) > dm.raw(t.triple.tail)) {
        rep.no_uphill = false;
        detail::note(rep, "uphill triple " + std::to_string(t.id) + " in layer " + std::to_string(l));
      }

  for (int l = 0; l <= L; ++l) {
    for (EntityId e : dm.layer(l)) {
      const auto shortest = shortest_paths(index, dm, e, popts);
      for (const auto& p : shortest) {
        ++rep.shortest_checked;
        if (!is_percolation_valid(potential_deltas(p, dm))) {
          rep.p1_shortest_included = false;
          detail::note(rep, "P1: shortest path not percolation-valid: " + detail::show(p));
        }
      }
      // A percolation path ends at most one step after reaching gamma(e).
      const int max_len = std::min(l + 1, PathOptions::kMaxLength);
      for (const auto& p : enumerate_paths(index, q, e, max_len, popts)) {
        if (!is_percolation_valid(potential_deltas(p, dm))) continue;
        ++rep.valid_checked;
        if (classify_redundant(p, dm, shortest)) {
          rep.p2_no_redundant = false;
          detail::note(rep, "P2: percolation path is redundant: " + detail::show(p));
        }
        if (static_cast<int>(p.length()) > L) continue;
        for (std::size_t k = 0; k < p.length(); ++k) {
          if (!opts.include_same_potential && k + 1 == p.length() &&
              dm.raw(p.steps[k].triple.head) == dm.raw(p.steps[k].triple.tail))
            continue;
          if (!detail::in_layer(sg.layers[k], p.steps[k].id)) {
            rep.layer_embedding = false;
            detail::note(rep, "step " + std::to_string(k + 1) + " missing from its layer: " + detail::show(p));
          }
        }
      }
    }
  }

  for (const auto& t : sg.neighborhood) {
    const int gh = dm.raw(t.triple.head), gt = dm.raw(t.triple.tail);
    if (gh > gt || gh >= L) continue;
    if (!opts.include_same_potential && gh == gt && t.triple.rel != index.identity_relation()) continue;
    ++rep.triples_checked;
    if (!detail::in_layer(sg.layers[static_cast<std::size_t>(gh)], t.id)) {
      rep.p3_all_facts = false;
      detail::note(rep, "P3: triple " + std::to_string(t.id) + " not in layer " + std::to_string(gh + 1));
    }
  }
  return rep;
}

struct UphillInsertion {
  EntityId from = 0;  // higher potential end
  EntityId to = 0;    // lower potential end
  RelationId rel = 0;
};

struct UphillReport {
  bool found = false;
  std::size_t new_redundant = 0;
  std::size_t walks_checked = 0;
  std::optional<RelationalPath> witness;
  std::string skipped_reason;
};

/// Inserts the base triple (from, rel, to) with gamma(from) > gamma(to) (its reverse is
/// added by augmentation) and searches for redundant walks that use the inserted triple.
inline UphillReport check_uphill_insertion(const kg::KnowledgeGraph& base, EntityId q, UphillInsertion ins,
                                                PathOptions popts = {}) {
  if (base.augmented()) throw std::invalid_argument("uphill insertion expects a base (unaugmented) graph");
  UphillReport rep;
  auto triples = base.base_triples();
  const kg::Triple added{ins.from, ins.rel, ins.to};
  if (std::find(triples.begin(), triples.end(), added) != triples.end()) {
    rep.skipped_reason = "triple already present";
    return rep;
  }
  const auto new_id = static_cast<TripleId>(triples.size());
  triples.push_back(added);
  kg::FactGraph g(kg::KnowledgeGraph(base.entities(), base.relations(), std::move(triples)));
  const auto dm = layering::relative_distances(g.index, q, PathOptions::kMaxLength);
  const auto gt = dm.gamma(ins.to);
  if (!gt) {
    rep.skipped_reason = "lower end unreachable";
    return rep;
  }
  const int max_len = *gt + 2;
  if (max_len > PathOptions::kMaxLength) {
    rep.skipped_reason = "witness longer than the enumeration guard";
    return rep;
  }
  const auto shortest = shortest_paths(g.index, dm, ins.to, popts);
  for (const auto& p : enumerate_paths(g.index, q, ins.to, max_len, popts)) {
    if (!p.contains(new_id)) continue;
    ++rep.walks_checked;
    if (classify_redundant(p, dm, shortest)) {
      ++rep.new_redundant;
      if (!rep.witness) rep.witness = p;
    }
  }
  rep.found = rep.new_redundant > 0;
  return rep;
}

}  // namespace grape::pathlab
