#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "grape/ad/tape.hpp"
#include "grape/kg/dataset.hpp"
#include "grape/pathlab/fixtures.hpp"

namespace grape::test {

using kg::EntityId;
using kg::Triple;

/// Temporary directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("grape_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

using NamedTriple = std::tuple<std::string, std::string, std::string>;

inline void write_named(const std::filesystem::path& p, const std::vector<NamedTriple>& ts) {
  std::string s;
  for (const auto& [h, r, t] : ts) s += h + "\t" + r + "\t" + t + "\n";
  write_text(p, s);
}

/// Synthetic graph with a learnable two-hop rule: parent(x,y) and parent(y,z) => grand(x,z).
/// `prefix` keeps entity names of separate graphs disjoint.
struct RuleGraph {
  std::vector<NamedTriple> facts, held_out;
};

inline RuleGraph rule_graph(const std::string& prefix, int families, std::uint64_t seed, double held_out_frac = 0.3) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution hold(held_out_frac);
  RuleGraph g;
  for (int f = 0; f < families; ++f) {
    auto n = [&](int i) { return prefix + std::to_string(f) + "_" + std::to_string(i); };
    // tree: 0 -> {1,2}, 1 -> {3,4}, 2 -> {5,6}
    const int kids[3][2] = {{1, 2}, {3, 4}, {5, 6}};
    for (int p = 0; p < 3; ++p)
      for (int c : kids[p]) g.facts.emplace_back(n(p), "parent", n(c));
    for (int c = 1; c <= 2; ++c) {
      for (int gc : kids[c]) {
        auto t = NamedTriple{n(0), "grand", n(gc)};
        (hold(rng) ? g.held_out : g.facts).push_back(t);
      }
    }
    g.facts.emplace_back(n(3), "sibling", n(4));
    g.facts.emplace_back(n(5), "sibling", n(6));
  }
  return g;
}

/// Writes an inductive dataset (train graph plus disjoint test graph) under `root`.
inline kg::DatasetPaths write_rule_dataset(const std::filesystem::path& root, int families = 12,
                                           std::uint64_t seed = 3) {
  auto tr = rule_graph("a", families, seed);
  auto te = rule_graph("b", std::max(2, families / 3), seed + 1);
  std::vector<NamedTriple> valid, train = tr.facts;
  for (std::size_t i = 0; i < tr.held_out.size(); ++i) valid.push_back(tr.held_out[i]);
  write_named(root / "tiny" / "train.txt", train);
  write_named(root / "tiny" / "valid.txt", valid);
  write_named(root / "tiny_ind" / "train.txt", te.facts);
  write_named(root / "tiny_ind" / "test.txt", te.held_out);
  return {root / "tiny", root / "tiny_ind"};
}

// ---- independent oracles ----------------------------------------------------------------

/// Distances by repeated relaxation over the augmented triple list (no adjacency index).
inline std::vector<int> relax_distances(const kg::KnowledgeGraph& g, EntityId q, int cap) {
  std::vector<int> d(g.num_entities(), -1);
  d[q] = 0;
  for (int round = 0; round < cap; ++round) {
    auto next = d;
    for (const auto& t : g.aug_triples())
      if (d[t.head] == round && next[t.tail] == -1) next[t.tail] = round + 1;
    d = next;
  }
  return d;
}

/// Every walk q -> target of length <= k over non-identity augmented triples, generated
/// breadth-first without pruning. Walks are lists of augmented triple ids.
inline std::vector<std::vector<kg::TripleId>> all_walks(const kg::KnowledgeGraph& g, EntityId q, EntityId target,
                                                        int k) {
  std::vector<std::vector<kg::TripleId>> out, frontier{{}};
  std::vector<EntityId> ends{q};
  if (q == target) out.push_back({});
  const auto& aug = g.aug_triples();
  for (int len = 1; len <= k; ++len) {
    std::vector<std::vector<kg::TripleId>> next;
    std::vector<EntityId> next_ends;
    for (std::size_t w = 0; w < frontier.size(); ++w)
      for (std::size_t i = 0; i < aug.size(); ++i) {
        if (g.is_identity(aug[i].rel) || aug[i].head != ends[w]) continue;
        auto walk = frontier[w];
        walk.push_back(static_cast<kg::TripleId>(i));
        if (aug[i].tail == target) out.push_back(walk);
        next.push_back(std::move(walk));
        next_ends.push_back(aug[i].tail);
      }
    frontier = std::move(next);
    ends = std::move(next_ends);
  }
  return out;
}

/// Rank averaged over every tie-breaking order: enumerates all permutations of the unfiltered
/// candidates, orders by (score desc, permutation position) and averages the answer's position.
inline double permutation_rank(const std::vector<double>& scores, std::size_t answer,
                               const std::set<std::size_t>& filtered = {}) {
  std::vector<std::size_t> cand;
  for (std::size_t e = 0; e < scores.size(); ++e)
    if (e == answer || !filtered.count(e)) cand.push_back(e);
  std::vector<std::size_t> perm(cand.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  double total = 0;
  std::size_t orders = 0;
  do {
    std::vector<std::size_t> pos(cand.size());
    for (std::size_t i = 0; i < perm.size(); ++i) pos[perm[i]] = i;
    std::vector<std::size_t> order(cand.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (scores[cand[a]] != scores[cand[b]]) return scores[cand[a]] > scores[cand[b]];
      return pos[a] < pos[b];
    });
    for (std::size_t i = 0; i < order.size(); ++i)
      if (cand[order[i]] == answer) total += static_cast<double>(i + 1);
    ++orders;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total / static_cast<double>(orders);
}

inline double harmonic(std::size_t n) {
  double h = 0;
  for (std::size_t k = 1; k <= n; ++k) h += 1.0 / static_cast<double>(k);
  return h;
}

inline std::set<Triple> triple_names_set(const kg::KnowledgeGraph& g) {
  return {g.base_triples().begin(), g.base_triples().end()};
}

// ---- finite differences -----------------------------------------------------------------

/// Norm-wise relative error between analytic and central-difference gradients of a scalar
/// function of `inputs`: ||a - n|| / max(||a||, ||n||, floor).
template <std::floating_point T>
double gradient_error(const std::function<ad::Tensor<T>(ad::Tape<T>&)>& f, std::vector<ad::Tensor<T>> inputs, T h,
                      double floor = 1e-6) {
  for (auto& x : inputs) x.zero_grad();
  {
    ad::Tape<T> tape;
    auto loss = f(tape);
    tape.backward(loss);
  }
  long double diff = 0, na = 0, nn = 0;
  for (auto& x : inputs) {
    std::vector<T> analytic(x.grad().begin(), x.grad().end());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const T orig = x.values()[i];
      x.values()[i] = orig + h;
      ad::Tape<T> t1(false);
      const double up = static_cast<double>(f(t1).item());
      x.values()[i] = orig - h;
      ad::Tape<T> t2(false);
      const double down = static_cast<double>(f(t2).item());
      x.values()[i] = orig;
      const double num = (up - down) / (2.0 * static_cast<double>(h));
      const double a = static_cast<double>(analytic[i]);
      diff += (a - num) * (a - num);
      na += a * a;
      nn += num * num;
    }
  }
  const double denom = std::max({std::sqrt(static_cast<double>(na)), std::sqrt(static_cast<double>(nn)), floor});
  return std::sqrt(static_cast<double>(diff)) / denom;
}

template <std::floating_point T>
ad::Tensor<T> random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1, double hi = 1,
                            bool requires_grad = true) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<T> v(r * c);
  for (auto& x : v) x = static_cast<T>(u(rng));
  return ad::Tensor<T>::from(r, c, std::move(v), requires_grad);
}

}  // namespace grape::test
