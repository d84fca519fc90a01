#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "grape/kg/adjacency_index.hpp"
#include "grape/kg/knowledge_graph.hpp"
#include "grape/kg/tsv.hpp"

namespace grape::kg {

enum class TaskKind { transductive, inductive };

inline const char* to_string(TaskKind k) { return k == TaskKind::transductive ? "transductive" : "inductive"; }

/// Directory layout: train.txt / valid.txt / test.txt. Inductive datasets add a second
/// directory holding the disjoint-entity test graph (train.txt = its facts, test.txt = queries).
struct DatasetPaths {
  std::filesystem::path train_dir;
  std::optional<std::filesystem::path> inductive_dir;
};

struct DatasetOptions {
  /// Transductive only: add validation triples to the fact graph used at test time.
  bool valid_facts_at_test = false;
  bool allow_entity_overlap = false;
};

/// An augmented fact graph together with its adjacency index.
struct FactGraph {
  KnowledgeGraph graph;
  AdjacencyIndex index;

  FactGraph() = default;
  explicit FactGraph(KnowledgeGraph kg) : graph(augment(std::move(kg))), index(graph) {}
};

struct Dataset {
  std::string name;
  TaskKind kind = TaskKind::transductive;

  /// Facts for training and validation; base triples double as training queries.
  FactGraph train;
  std::vector<Triple> valid;
  /// Every known true triple of the training graph's entity space (filtered ranking).
  std::vector<Triple> train_known;

  /// Facts used at test time (inductive: the disjoint test graph).
  FactGraph test;
  std::vector<Triple> test_queries;
  std::vector<Triple> test_known;
};

struct DatasetStats {
  std::size_t entities = 0, base_relations = 0, train = 0, valid = 0, test = 0, augmented = 0;
  std::size_t test_graph_entities = 0, test_graph_facts = 0;
};

namespace detail {
inline std::vector<Triple> load_optional(const std::filesystem::path& p, Vocabulary& e, Vocabulary& r,
                                         TsvOptions o) {
  if (!std::filesystem::exists(p)) return {};
  return load_triples(p, e, r, o);
}

inline std::vector<Triple> concat(std::initializer_list<const std::vector<Triple>*> parts) {
  std::vector<Triple> out;
  for (auto* p : parts) out.insert(out.end(), p->begin(), p->end());
  return out;
}
}  // namespace detail

inline Dataset load_dataset(const DatasetPaths& paths, DatasetOptions opts = {}) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(paths.train_dir)) throw GraphError("dataset directory not found: " + paths.train_dir.string());

  Dataset ds;
  ds.name = paths.train_dir.filename().string();
  Vocabulary ents, rels;
  auto train = load_triples(paths.train_dir / "train.txt", ents, rels);
  auto valid = load_triples(paths.train_dir / "valid.txt", ents, rels);

  if (!paths.inductive_dir) {
    ds.kind = TaskKind::transductive;
    auto test = load_triples(paths.train_dir / "test.txt", ents, rels);
    ds.train = FactGraph(KnowledgeGraph(ents, rels, train));
    ds.valid = valid;
    ds.train_known = detail::concat({&train, &valid, &test});
    if (opts.valid_facts_at_test)
      ds.test = FactGraph(KnowledgeGraph(ents, rels, detail::concat({&train, &valid})));
    else
      ds.test = ds.train;
    ds.test_queries = std::move(test);
    ds.test_known = ds.train_known;
    return ds;
  }

  ds.kind = TaskKind::inductive;
  auto extra = detail::load_optional(paths.train_dir / "test.txt", ents, rels, {});
  ds.train = FactGraph(KnowledgeGraph(ents, rels, train));
  ds.valid = valid;
  ds.train_known = detail::concat({&train, &valid, &extra});

  const fs::path& ind = *paths.inductive_dir;
  if (!fs::is_directory(ind)) throw GraphError("inductive test directory not found: " + ind.string());
  Vocabulary test_ents;
  Vocabulary test_rels = rels;  // shared relation vocabulary
  TsvOptions strict{.allow_new_entities = true, .allow_new_relations = false};
  std::vector<Triple> facts, test, ind_valid;
  try {
    facts = load_triples(ind / "train.txt", test_ents, test_rels, strict);
    ind_valid = detail::load_optional(ind / "valid.txt", test_ents, test_rels, strict);
    test = load_triples(ind / "test.txt", test_ents, test_rels, strict);
  } catch (const ParseError& e) {
    throw GraphError(std::string("inductive test graph uses a relation unseen at training time or is malformed: ") +
                     e.what());
  }
  if (!opts.allow_entity_overlap) {
    for (const auto& name : test_ents.names())
      if (ents.find(name))
        throw GraphError("inductive test graph shares entity '" + name + "' with the training graph");
  }
  ds.test = FactGraph(KnowledgeGraph(test_ents, test_rels, facts));
  ds.test_queries = test;
  ds.test_known = detail::concat({&facts, &ind_valid, &test});
  return ds;
}

inline DatasetStats stats(const Dataset& ds) {
  DatasetStats s;
  s.entities = ds.train.graph.num_entities();
  s.base_relations = ds.train.graph.num_base_relations();
  s.train = ds.train.graph.base_triples().size();
  s.valid = ds.valid.size();
  s.test = ds.test_queries.size();
  s.augmented = ds.train.graph.aug_triples().size();
  s.test_graph_entities = ds.test.graph.num_entities();
  s.test_graph_facts = ds.test.graph.base_triples().size();
  return s;
}

}  // namespace grape::kg
