#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "grape/pathlab/entropy_sim.hpp"
#include "grape/pathlab/fixtures.hpp"
#include "grape/pathlab/paths.hpp"
#include "grape/pathlab/principles.hpp"
#include "grape/pathlab/triple_count.hpp"
#include "support.hpp"

using namespace grape;
using pathlab::RelationalPath;

namespace {

struct Toy {
  kg::FactGraph fg = pathlab::make_toy_graph();
  const kg::KnowledgeGraph& g() const { return fg.graph; }
  kg::EntityId id(const char* n) const { return g().entities().at(n); }
  kg::TripleId tid(const char* h, const char* r, const char* t) const {
    const kg::Triple want{id(h), g().relations().at(r), id(t)};
    const auto& aug = g().aug_triples();
    return static_cast<kg::TripleId>(std::find(aug.begin(), aug.end(), want) - aug.begin());
  }
  RelationalPath path(std::initializer_list<std::array<const char*, 3>> steps) const {
    RelationalPath p;
    for (const auto& s : steps) {
      const auto i = tid(s[0], s[1], s[2]);
      p.steps.push_back({i, g().aug_triples()[i]});
    }
    p.source = p.steps.front().triple.head;
    p.target = p.steps.back().triple.tail;
    return p;
  }
};

std::vector<kg::TripleId> ids(const RelationalPath& p) {
  std::vector<kg::TripleId> v;
  for (const auto& s : p.steps) v.push_back(s.id);
  return v;
}

/// Single-path overlap oracle straight from the walk lists.
bool oracle_redundant(const std::vector<kg::TripleId>& walk, int gamma,
                      const std::vector<std::vector<kg::TripleId>>& shortest) {
  if (static_cast<int>(walk.size()) <= gamma) return false;
  std::set<kg::TripleId> mine(walk.begin(), walk.end());
  for (const auto& s : shortest) {
    int shared = 0;
    for (auto t : std::set<kg::TripleId>(s.begin(), s.end())) shared += mine.count(t) ? 1 : 0;
    if (shared >= gamma) return true;
  }
  return false;
}

}  // namespace

// ---- enumeration ---------------------------------------------------------------------------

TEST(EnumeratePaths, ToyAToCLengthTwo) {
  Toy toy;
  auto paths = pathlab::enumerate_paths(toy.fg.index, toy.id("A"), toy.id("C"), 2);
  std::set<std::vector<kg::TripleId>> got;
  for (const auto& p : paths) {
    EXPECT_TRUE(p.well_formed());
    got.insert(ids(p));
  }
  std::set<std::vector<kg::TripleId>> want{{toy.tid("A", "r1", "B"), toy.tid("B", "r1", "C")},
                                           {toy.tid("A", "r2", "D"), toy.tid("D", "r2", "C")}};
  EXPECT_EQ(got, want);
  EXPECT_EQ(paths.size(), 2u);
}

TEST(EnumeratePaths, ZeroLengthSelfPath) {
  Toy toy;
  auto paths = pathlab::enumerate_paths(toy.fg.index, toy.id("A"), toy.id("A"), 0);
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_EQ(paths[0].length(), 0u);
}

TEST(EnumeratePaths, LengthThreeIncludesDetour) {
  Toy toy;
  auto paths = pathlab::enumerate_paths(toy.fg.index, toy.id("A"), toy.id("C"), 3);
  const std::vector<kg::TripleId> detour{toy.tid("A", "r1", "B"), toy.tid("B", "r2", "D"), toy.tid("D", "r2", "C")};
  EXPECT_TRUE(std::any_of(paths.begin(), paths.end(), [&](const RelationalPath& p) { return ids(p) == detour; }));
}

TEST(EnumeratePaths, GuardRejectsLongOrHugeEnumerations) {
  Toy toy;
  EXPECT_THROW(pathlab::enumerate_paths(toy.fg.index, toy.id("A"), toy.id("C"), 7), pathlab::EnumerationLimit);
  pathlab::PathOptions tight;
  tight.max_paths = 3;
  EXPECT_THROW(pathlab::enumerate_paths(toy.fg.index, toy.id("A"), toy.id("C"), 4, tight), pathlab::EnumerationLimit);
}

TEST(EnumeratePaths, MatchesBruteForceWalksOnRandomGraphs) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto fg = pathlab::make_random_graph({.entities = 6 + seed % 6, .relations = 2, .triples = 6 + seed % 8}, seed);
    const kg::EntityId q = static_cast<kg::EntityId>(seed % fg.graph.num_entities());
    const kg::EntityId t = static_cast<kg::EntityId>((seed * 5 + 1) % fg.graph.num_entities());
    const int k = 1 + static_cast<int>(seed % 4);
    std::multiset<std::vector<kg::TripleId>> got, want;
    for (const auto& p : pathlab::enumerate_paths(fg.index, q, t, k)) got.insert(ids(p));
    for (auto& w : test::all_walks(fg.graph, q, t, k)) want.insert(w);
    EXPECT_EQ(got, want) << "seed " << seed;
  }
}

// ---- classification ------------------------------------------------------------------------

TEST(ClassifyRedundant, BackAndForthWalkIsRedundant) {
  Toy toy;
  auto dm = layering::relative_distances(toy.fg.index, toy.id("A"), 6);
  auto sp = pathlab::shortest_paths(toy.fg.index, dm, toy.id("C"));
  auto p = toy.path({{"A", "r1", "B"}, {"B", "r1_inv", "A"}, {"A", "r1", "B"}, {"B", "r1", "C"}});
  EXPECT_TRUE(pathlab::classify_redundant(p, dm, sp));
}

TEST(ClassifyRedundant, DetourSharingOneTripleIsNot) {
  Toy toy;
  auto dm = layering::relative_distances(toy.fg.index, toy.id("A"), 6);
  auto sp = pathlab::shortest_paths(toy.fg.index, dm, toy.id("C"));
  auto p = toy.path({{"A", "r1", "B"}, {"B", "r2", "D"}, {"D", "r2", "C"}});
  EXPECT_FALSE(pathlab::classify_redundant(p, dm, sp));
  // Against the union of both shortest paths it would share two triples.
  EXPECT_TRUE(pathlab::classify_redundant(p, dm, sp, pathlab::OverlapMode::path_union));
}

TEST(ClassifyRedundant, ShortestPathsAreNeverRedundant) {
  Toy toy;
  auto dm = layering::relative_distances(toy.fg.index, toy.id("A"), 6);
  for (const char* t : {"B", "C", "D", "E"}) {
    auto sp = pathlab::shortest_paths(toy.fg.index, dm, toy.id(t));
    ASSERT_FALSE(sp.empty());
    for (const auto& p : sp) EXPECT_FALSE(pathlab::classify_redundant(p, dm, sp));
  }
}

TEST(ClassifyRedundant, TargetMismatchIsAnError) {
  Toy toy;
  auto dm = layering::relative_distances(toy.fg.index, toy.id("A"), 6);
  auto sp = pathlab::shortest_paths(toy.fg.index, dm, toy.id("C"));
  auto p = toy.path({{"A", "r1", "B"}});
  EXPECT_THROW(pathlab::classify_redundant(p, dm, sp), std::invalid_argument);
}

TEST(PotentialDeltas, DetourIsInvalid) {
  Toy toy;
  auto dm = layering::relative_distances(toy.fg.index, toy.id("A"), 6);
  auto p = toy.path({{"A", "r1", "B"}, {"B", "r2", "D"}, {"D", "r2", "C"}});
  EXPECT_EQ(pathlab::potential_deltas(p, dm), (std::vector<int>{1, 0, 1}));
  EXPECT_FALSE(pathlab::is_percolation_valid(pathlab::potential_deltas(p, dm)));
}

TEST(PotentialDeltas, SamePotentialStep) {
  Toy toy;
  auto dm = layering::relative_distances(toy.fg.index, toy.id("A"), 6);
  auto last = toy.path({{"A", "r1", "B"}, {"B", "r2", "D"}});
  EXPECT_EQ(pathlab::potential_deltas(last, dm).back(), 1);
  auto mid = toy.path({{"A", "r1", "B"}, {"B", "r2", "D"}, {"D", "r2", "C"}});
  EXPECT_EQ(pathlab::potential_deltas(mid, dm)[1], 0);
  auto shortest = toy.path({{"A", "r1", "B"}, {"B", "r1", "C"}});
  EXPECT_TRUE(pathlab::is_percolation_valid(pathlab::potential_deltas(shortest, dm)));
}

TEST(PotentialDeltas, MissingDistanceIsAnError) {
  Toy toy;
  auto dm = layering::relative_distances(toy.fg.index, toy.id("A"), 1);
  auto p = toy.path({{"A", "r1", "B"}, {"B", "r1", "C"}});
  EXPECT_THROW(pathlab::potential_deltas(p, dm), std::invalid_argument);
}

TEST(PathProperties, ClassificationAgainstWalkOracle) {
  std::size_t shortest_seen = 0, valid_seen = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto fg = pathlab::make_random_graph({.entities = 5 + seed % 10, .relations = 1 + seed % 3, .triples = 5 + seed % 12},
                                         100 + seed);
    const auto& g = fg.graph;
    const kg::EntityId q = static_cast<kg::EntityId>(seed % g.num_entities());
    const int L = 1 + static_cast<int>(seed % 4);
    auto dm = layering::relative_distances(fg.index, q, 6);
    const auto oracle = test::relax_distances(g, q, 6);
    for (kg::EntityId t = 0; t < g.num_entities(); ++t) {
      if (oracle[t] < 0 || oracle[t] > L) continue;
      const int gamma = oracle[t];
      std::vector<std::vector<kg::TripleId>> shortest;
      for (auto& w : test::all_walks(g, q, t, gamma))
        if (static_cast<int>(w.size()) == gamma) shortest.push_back(w);
      auto sp = pathlab::shortest_paths(fg.index, dm, t);
      ASSERT_EQ(sp.size(), shortest.size());
      for (const auto& p : pathlab::enumerate_paths(fg.index, q, t, std::min(gamma + 2, 5))) {
        auto c = pathlab::classify(p, dm, sp);
        EXPECT_EQ(c.is_redundant, oracle_redundant(ids(p), gamma, shortest)) << "seed " << seed;
        if (c.is_shortest) {
          ++shortest_seen;
          EXPECT_TRUE(c.is_percolation_valid);
          EXPECT_FALSE(c.is_redundant);
        }
        if (c.is_percolation_valid) {
          ++valid_seen;
          EXPECT_FALSE(c.is_redundant) << "seed " << seed;
        }
      }
    }
  }
  EXPECT_GT(shortest_seen, 50u);
  EXPECT_GT(valid_seen, shortest_seen);
}

// ---- principles ----------------------------------------------------------------------------

TEST(Principles, ToyPasses) {
  Toy toy;
  auto rep = pathlab::verify_percolation_principles(toy.fg.index, toy.id("A"), 3);
  EXPECT_TRUE(rep.passed());
  EXPECT_TRUE(rep.counterexamples.empty());
  EXPECT_GT(rep.shortest_checked, 0u);
  EXPECT_GT(rep.valid_checked, rep.shortest_checked);
}

TEST(Principles, SingleTripleGraphPasses) {
  kg::Vocabulary e, r;
  e.intern("x");
  e.intern("y");
  r.intern("r");
  kg::FactGraph fg(kg::KnowledgeGraph(e, r, {{0, 0, 1}}));
  for (int L = 1; L <= 3; ++L) EXPECT_TRUE(pathlab::verify_percolation_principles(fg.index, 0, L).passed());
}

TEST(Principles, RandomGraphs) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto fg = pathlab::make_random_graph({.entities = 6 + seed % 10, .relations = 2, .triples = 8 + seed % 10}, seed);
    const auto q = static_cast<kg::EntityId>(seed % fg.graph.num_entities());
    auto rep = pathlab::verify_percolation_principles(fg.index, q, 1 + static_cast<int>(seed % 4));
    EXPECT_TRUE(rep.passed()) << "seed " << seed << ": "
                              << (rep.counterexamples.empty() ? "" : rep.counterexamples.front());
  }
}

TEST(Principles, UphillInsertionOnToyCreatesRedundantPath) {
  Toy toy;
  const pathlab::UphillInsertion ins{toy.id("C"), toy.id("B"), toy.g().relations().at("r1")};
  auto rep = pathlab::check_uphill_insertion(pathlab::toy_base_graph(), toy.id("A"), ins);
  EXPECT_TRUE(rep.skipped_reason.empty()) << rep.skipped_reason;
  EXPECT_TRUE(rep.found);
  EXPECT_GE(rep.new_redundant, 1u);
  ASSERT_TRUE(rep.witness.has_value());
  EXPECT_TRUE(rep.witness->well_formed());
}

TEST(Principles, UphillInsertionOfExistingTripleIsSkipped) {
  Toy toy;
  const pathlab::UphillInsertion ins{toy.id("B"), toy.id("A"), toy.g().relations().at("r1")};
  // (B, r1, A) is new; (A, r1, B) already exists.
  const pathlab::UphillInsertion dup{toy.id("A"), toy.id("B"), toy.g().relations().at("r1")};
  EXPECT_FALSE(pathlab::check_uphill_insertion(pathlab::toy_base_graph(), toy.id("A"), dup).skipped_reason.empty());
  EXPECT_TRUE(pathlab::check_uphill_insertion(pathlab::toy_base_graph(), toy.id("A"), ins).found);
  EXPECT_THROW(pathlab::check_uphill_insertion(toy.g(), toy.id("A"), ins), std::invalid_argument);
}

// ---- triple counts -------------------------------------------------------------------------

TEST(TripleCount, ToyCounts) {
  Toy toy;
  auto r = pathlab::count_triples(toy.fg.index, toy.id("A"), 3);
  EXPECT_EQ(r.percolation_per_layer, (std::vector<std::uint64_t>{3, 6, 2}));
  EXPECT_EQ(r.neighborhood, 17u);

  // Oracle: partition the neighborhood by the farther endpoint (identity loop of q counts at hop 1).
  const auto d = test::relax_distances(toy.g(), toy.id("A"), 3);
  std::vector<std::uint64_t> n(3, 0);
  for (const auto& t : toy.g().aug_triples())
    if (d[t.head] >= 0 && d[t.tail] >= 0) ++n[static_cast<std::size_t>(std::max({d[t.head], d[t.tail], 1}) - 1)];
  EXPECT_EQ(r.hop_counts, n);
  EXPECT_EQ(n, (std::vector<std::uint64_t>{9, 5, 3}));

  EXPECT_EQ(r.grape, 3u + 6u + 17u);
  EXPECT_EQ(r.redgnn, 17u + 9u + (9u + 5u));
  EXPECT_EQ(r.nbfnet, 3u * 17u);
  EXPECT_EQ(r.grail_lower_bound, 3u * 17u);
  EXPECT_EQ(r.count(pathlab::CountMethod::grape), 26u);
  EXPECT_EQ(r.count(pathlab::CountMethod::redgnn), 40u);
  EXPECT_EQ(r.count(pathlab::CountMethod::nbfnet), 51u);
  EXPECT_TRUE(r.ordered());

  auto no_dec = pathlab::count_triples(toy.fg.index, toy.id("A"), 3, {.include_decoder = false});
  EXPECT_EQ(no_dec.grape, 9u);
}

TEST(TripleCount, OrderingHoldsOnRandomGraphs) {
  std::vector<pathlab::TripleCountReport> reports;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto fg = pathlab::make_random_graph({.entities = 5 + seed % 40, .relations = 1 + seed % 4, .triples = 3 + seed % 120},
                                         seed);
    const auto q = static_cast<kg::EntityId>(seed % fg.graph.num_entities());
    auto r = pathlab::count_triples(fg.index, q, 1 + static_cast<int>(seed % 6));
    EXPECT_TRUE(r.ordered()) << "seed " << seed << " grape " << r.grape << " redgnn " << r.redgnn << " nbfnet "
                             << r.nbfnet;
    std::uint64_t total = 0;
    for (auto c : r.hop_counts) total += c;
    EXPECT_EQ(total, r.neighborhood);
    reports.push_back(r);
  }
  auto s = pathlab::summarize(reports);
  EXPECT_EQ(s.queries, 200u);
  EXPECT_EQ(s.ordered, 200u);
  EXPECT_DOUBLE_EQ(s.ordered_fraction(), 1.0);
  EXPECT_LE(s.grape, s.redgnn);
  EXPECT_LE(s.redgnn, s.nbfnet);
}

// ---- entropy simulation --------------------------------------------------------------------

TEST(EntropySim, PerHopVarianceMatchesHopCount) {
  for (auto fam : {pathlab::TransformFamily::rotation, pathlab::TransformFamily::translation}) {
    pathlab::EntropySimConfig cfg;
    cfg.family = fam;
    cfg.hops = 8;
    cfg.samples = 20'000;
    cfg.d = 8;
    auto rep = pathlab::simulate_error_entropy(cfg);
    ASSERT_EQ(rep.per_hop.size(), 9u);
    EXPECT_EQ(rep.per_hop[0].variance, 0.0);
    for (int k = 1; k <= 8; ++k) {
      const auto& v = rep.per_hop[static_cast<std::size_t>(k)];
      EXPECT_NEAR(v.variance, k * cfg.sigma2, 3 * v.se) << pathlab::to_string(fam) << " k=" << k;
    }
    EXPECT_TRUE(rep.monotone);
  }
}

TEST(EntropySim, ScalingFamilyIsMonotone) {
  pathlab::EntropySimConfig cfg;
  cfg.family = pathlab::TransformFamily::scaling;
  cfg.samples = 10'000;
  auto rep = pathlab::simulate_error_entropy(cfg);
  EXPECT_TRUE(rep.monotone);
  for (const auto& v : rep.per_hop) EXPECT_GE(v.variance, 0.0);
}

TEST(EntropySim, RedundantPathIncreasesAggregatedVariance) {
  pathlab::EntropySimConfig cfg;
  cfg.m = 1;
  cfg.alpha = 2;
  cfg.ell = 3;
  cfg.shared_prefix = 1;
  cfg.family = pathlab::TransformFamily::translation;
  auto rep = pathlab::simulate_error_entropy(cfg);
  EXPECT_DOUBLE_EQ(rep.bound, 0.5);
  EXPECT_TRUE(rep.increase_significant);
  EXPECT_TRUE(rep.bound_respected);
  EXPECT_NEAR(rep.after.variance, rep.analytic_after, 4 * rep.after.se);
  EXPECT_NEAR(rep.before.variance, rep.analytic_before, 4 * rep.before.se);
}

TEST(EntropySim, RejectsBadConfigs) {
  EXPECT_THROW(pathlab::parse_family("shear"), std::invalid_argument);
  pathlab::EntropySimConfig cfg;
  cfg.samples = 100;
  EXPECT_THROW(pathlab::simulate_error_entropy(cfg), std::invalid_argument);
}

TEST(EntropySim, IndependentOfThreadCount) {
  pathlab::EntropySimConfig cfg;
  cfg.samples = 10'000;
  cfg.hops = 3;
  cfg.d = 4;
  auto a = pathlab::simulate_error_entropy(cfg);
  cfg.threads = 3;
  auto b = pathlab::simulate_error_entropy(cfg);
  for (std::size_t k = 0; k < a.per_hop.size(); ++k) EXPECT_EQ(a.per_hop[k].variance, b.per_hop[k].variance);
  EXPECT_EQ(a.increase, b.increase);
}
