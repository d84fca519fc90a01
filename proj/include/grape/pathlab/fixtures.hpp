#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "grape/kg/dataset.hpp"

namespace grape::pathlab {

/// Five entities A..E, relations r1, r2:
/// (A,r1,B) (B,r1,C) (A,r2,D) (D,r2,C) (C,r1,E) (B,r2,D).
inline kg::KnowledgeGraph toy_base_graph() {
  kg::Vocabulary ents, rels;
  for (const char* n : {"A", "B", "C", "D", "E"}) ents.intern(n);
  rels.intern("r1");
  rels.intern("r2");
  auto t = [&](const char* h, const char* r, const char* tl) { return kg::Triple{ents.at(h), rels.at(r), ents.at(tl)}; };
  std::vector<kg::Triple> base{t("A", "r1", "B"), t("B", "r1", "C"), t("A", "r2", "D"),
                               t("D", "r2", "C"), t("C", "r1", "E"), t("B", "r2", "D")};
  return kg::KnowledgeGraph(std::move(ents), std::move(rels), std::move(base));
}

inline kg::FactGraph make_toy_graph() { return kg::FactGraph(toy_base_graph()); }

struct RandomGraphSpec {
  std::size_t entities = 12;
  std::size_t relations = 3;
  std::size_t triples = 18;
  bool allow_self_loops = false;
};

/// Uniformly random simple multigraph: distinct (h, r, t) triples.
inline kg::KnowledgeGraph random_base_graph(const RandomGraphSpec& spec, std::uint64_t seed) {
  kg::Vocabulary ents, rels;
  for (std::size_t i = 0; i < spec.entities; ++i) ents.intern("e" + std::to_string(i));
  for (std::size_t i = 0; i < spec.relations; ++i) rels.intern("r" + std::to_string(i));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> pe(0, static_cast<std::uint32_t>(spec.entities - 1));
  std::uniform_int_distribution<std::uint32_t> pr(0, static_cast<std::uint32_t>(spec.relations - 1));
  const std::size_t cap = spec.entities * spec.entities * spec.relations;
  const std::size_t want = std::min(spec.triples, spec.allow_self_loops ? cap : cap - spec.entities * spec.relations);
  std::set<kg::Triple> seen;
  std::vector<kg::Triple> base;
  while (base.size() < want) {
    kg::Triple t{pe(rng), pr(rng), pe(rng)};
    if (!spec.allow_self_loops && t.head == t.tail) continue;
    if (seen.insert(t).second) base.push_back(t);
  }
  return kg::KnowledgeGraph(std::move(ents), std::move(rels), std::move(base));
}

inline kg::FactGraph make_random_graph(const RandomGraphSpec& spec, std::uint64_t seed) {
  return kg::FactGraph(random_base_graph(spec, seed));
}

}  // namespace grape::pathlab
