#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "grape/kg/triple.hpp"
#include "grape/kg/vocabulary.hpp"

namespace grape::kg {

class ParseError : public GraphError {
 public:
  ParseError(const std::filesystem::path& file, std::size_t line, const std::string& what)
      : GraphError(file.string() + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct TsvOptions {
  bool allow_new_entities = true;
  bool allow_new_relations = true;
};

/// Reads "head<TAB>relation<TAB>tail" lines, interning names into the given vocabularies.
inline std::vector<Triple> load_triples(const std::filesystem::path& path, Vocabulary& entities,
                                        Vocabulary& relations, TsvOptions opts = {}) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open triple file: " + path.string());

  std::vector<Triple> out;
  std::string line;
  std::size_t lineno = 0;
  std::string_view fields[3];
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::string_view rest(line);
    std::size_t n = 0;
    while (true) {
      auto tab = rest.find('\t');
      if (n == 3) {
        throw ParseError(path, lineno, "expected 3 tab-separated fields, got more");
      }
      fields[n++] = rest.substr(0, tab);
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    if (n != 3) throw ParseError(path, lineno, "expected 3 tab-separated fields, got " + std::to_string(n));
    for (auto f : fields)
      if (f.empty()) throw ParseError(path, lineno, "empty field");

    auto resolve = [&](Vocabulary& vocab, std::string_view name, bool allow_new, const char* kind) {
      if (allow_new) return vocab.intern(name);
      auto id = vocab.find(name);
      if (!id) throw ParseError(path, lineno, std::string("unknown ") + kind + " '" + std::string(name) + "'");
      return *id;
    };
    Triple t;
    t.head = resolve(entities, fields[0], opts.allow_new_entities, "entity");
    t.rel = resolve(relations, fields[1], opts.allow_new_relations, "relation");
    t.tail = resolve(entities, fields[2], opts.allow_new_entities, "entity");
    out.push_back(t);
  }
  if (lineno == 0 || out.empty()) throw GraphError("triple file is empty: " + path.string());
  return out;
}

struct LoadedTriples {
  std::vector<Triple> triples;
  Vocabulary entities;
  Vocabulary relations;
};

inline LoadedTriples load_triples(const std::filesystem::path& path) {
  LoadedTriples r;
  r.triples = load_triples(path, r.entities, r.relations);
  return r;
}

inline void write_triples(const std::filesystem::path& path, const std::vector<Triple>& triples,
                          const Vocabulary& entities, const Vocabulary& relations) {
  std::ofstream out(path);
  if (!out) throw GraphError("cannot write triple file: " + path.string());
  for (const Triple& t : triples)
    out << entities.name(t.head) << '\t' << relations.name(t.rel) << '\t' << entities.name(t.tail) << '\n';
}

}  // namespace grape::kg
