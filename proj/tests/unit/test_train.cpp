#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "grape/pathlab/fixtures.hpp"
#include "grape/train/loss.hpp"
#include "grape/train/sampler.hpp"
#include "grape/train/trainer.hpp"
#include "support.hpp"

using namespace grape;
using model::GrapeModel;

namespace {

model::ModelConfig tiny_model() {
  model::ModelConfig c;
  c.L = 3;
  c.d = 8;
  c.d_l = 4;
  return c;
}

train::TrainConfig tiny_train(std::uint64_t seed, int epochs = 1) {
  train::TrainConfig c;
  c.batch_size = 8;
  c.epochs = epochs;
  c.lr = 5e-3;
  c.seed = seed;
  return c;
}

struct RuleData {
  test::TempDir dir;
  kg::Dataset ds = kg::load_dataset(test::write_rule_dataset(dir.path()));
};

}  // namespace

TEST(Loss, EqualScoresGiveLogN) {
  std::vector<double> s(7, 0.3);
  EXPECT_NEAR(train::training_loss(s, 2), std::log(7.0), 1e-12);
}

TEST(Loss, Limits) {
  std::vector<double> s{50, 0, 0};
  EXPECT_NEAR(train::training_loss(s, 0), 0.0, 1e-20);
  EXPECT_NEAR(train::training_loss(s, 1), 50.0, 1e-12);
  std::vector<double> big{1000, 999};
  EXPECT_TRUE(std::isfinite(train::training_loss(big, 1)));
}

TEST(Loss, MatchesSoftmaxOracle) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd(0, 2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> s(2 + trial);
    for (auto& v : s) v = nd(rng);
    const std::size_t a = static_cast<std::size_t>(trial) % s.size();
    double z = 0;
    for (double v : s) z += std::exp(v);
    EXPECT_NEAR(train::training_loss(s, a), -std::log(std::exp(s[a]) / z), 1e-5);
  }
}

TEST(Loss, BatchLossSumsPerQueryLossAndSkipsUnreachable) {
  auto fg = pathlab::make_toy_graph();
  const auto& g = fg.graph;
  auto id = [&](const char* n) { return g.entities().at(n); };
  std::vector<layering::Query> qs{{id("A"), 0, id("C")}, {id("B"), 1, id("D")}, {id("E"), 0, id("A")}};
  auto bg = train::build_batch(fg.index, qs, 2, {}, nullptr, 1);
  ASSERT_EQ(bg.answer_node[2], -1);  // E has no outgoing base triples
  std::mt19937_64 rng(1);
  auto scores = test::random_tensor<double>(bg.num_nodes(), 1, rng);
  ad::Tape<double> t;
  auto bl = train::batch_loss(t, scores, bg);
  EXPECT_EQ(bl.used, 2u);
  EXPECT_EQ(bl.skipped, 1u);
  double want = 0;
  for (std::size_t b = 0; b < 2; ++b) {
    const auto lo = static_cast<std::size_t>(bg.query_offset[b]), hi = static_cast<std::size_t>(bg.query_offset[b + 1]);
    std::vector<double> s(scores.values().begin() + static_cast<long>(lo), scores.values().begin() + static_cast<long>(hi));
    want += train::training_loss(s, static_cast<std::size_t>(bg.answer_node[b]) - lo);
  }
  EXPECT_NEAR(bl.loss.item(), want, 1e-12);
}

TEST(Sampler, EpochCoversEveryTripleInBothDirections) {
  auto fg = pathlab::make_toy_graph();
  const auto& g = fg.graph;
  auto qs = train::training_queries(g);
  ASSERT_EQ(qs.size(), 2 * g.base_triples().size());
  std::map<kg::TripleId, int> seen;
  for (const auto& q : qs) {
    const auto& t = g.base_triples()[q.source_triple];
    const bool forward = q.query.q == t.head && q.query.r_q == t.rel && q.query.answer == t.tail;
    const bool backward = q.query.q == t.tail && q.query.r_q == g.reverse_of(t.rel) && q.query.answer == t.head;
    EXPECT_TRUE(forward || backward);
    ++seen[q.source_triple];
  }
  for (const auto& [id, n] : seen) EXPECT_EQ(n, 2) << id;
  auto shuffled = qs;
  train::shuffle_queries(shuffled, 1);
  EXPECT_EQ(shuffled.size(), qs.size());
}

TEST(Sampler, LeakageFilterHidesSourceTripleAndReverse) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto fg = pathlab::make_random_graph({.entities = 12, .relations = 3, .triples = 30}, seed);
    for (const auto& tq : train::training_queries(fg.graph)) {
      auto filter = train::leakage_filter(fg, tq, false);
      auto sg = layering::build_layered_subgraph(fg.index, tq.query.q, 3, {}, filter);
      const auto rev = fg.graph.reverse_triple_id(tq.source_triple);
      for (const auto& t : sg.neighborhood) {
        EXPECT_NE(t.id, tq.source_triple);
        EXPECT_NE(t.id, rev);
      }
      for (const auto& layer : sg.layers)
        for (const auto& t : layer.triples) EXPECT_TRUE(t.id != tq.source_triple && t.id != rev);
    }
  }
}

TEST(Sampler, DirectDropoutRemovesEveryTripleJoiningQueryAndAnswer) {
  kg::Vocabulary e, r;
  for (auto n : {"h", "t", "x"}) e.intern(n);
  for (auto n : {"r1", "r2", "r3"}) r.intern(n);
  kg::FactGraph fg(kg::KnowledgeGraph(e, r, {{0, 0, 1}, {0, 1, 1}, {1, 2, 0}, {0, 0, 2}, {2, 0, 1}}));
  train::TrainingQuery tq{{0, 0, 1}, 0};
  auto filter = train::leakage_filter(fg, tq, true);
  auto sg = layering::build_layered_subgraph(fg.index, 0, 2, {}, filter);
  for (const auto& t : sg.neighborhood) {
    const bool joins = (t.triple.head == 0 && t.triple.tail == 1) || (t.triple.head == 1 && t.triple.tail == 0);
    EXPECT_FALSE(joins) << t.id;
  }
  // The answer remains reachable through x.
  EXPECT_EQ(sg.distances.gamma(1).value_or(-1), 2);
  auto plain = train::leakage_filter(fg, tq, false);
  EXPECT_EQ(plain.ids().size(), 2u);
  EXPECT_EQ(filter.ids().size(), 6u);
}

TEST(Trainer, LossDecreasesOverTwoEpochsOnAverage) {
  RuleData data;
  double first = 0, second = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GrapeModel<float> net(tiny_model(), data.ds.train.graph.num_base_relations());
    net.init(seed);
    train::Trainer<float> tr(net, data.ds, tiny_train(seed));
    auto e1 = tr.run_epoch(1);
    auto e2 = tr.run_epoch(2);
    EXPECT_EQ(e1.used + e1.skipped, 2 * data.ds.train.graph.base_triples().size());
    first += e1.loss;
    second += e2.loss;
  }
  EXPECT_LT(second, first);
}

TEST(Trainer, EpochLossIsBitwiseReproducible) {
  RuleData data;
  auto once = [&](unsigned threads) {
    GrapeModel<float> net(tiny_model(), data.ds.train.graph.num_base_relations());
    net.init(11);
    auto cfg = tiny_train(11);
    cfg.threads = threads;
    train::Trainer<float> tr(net, data.ds, cfg);
    return tr.run_epoch(1).loss;
  };
  const double a = once(1), b = once(1);
  EXPECT_EQ(a, b);
  const double c = once(2), d = once(2);
  EXPECT_EQ(c, d);
}

TEST(Trainer, ResumeContinuesFromLastCheckpoint) {
  RuleData data;
  const auto R = data.ds.train.graph.num_base_relations();
  test::TempDir out;

  GrapeModel<float> full(tiny_model(), R);
  full.init(2);
  auto cfg = tiny_train(2, 3);
  cfg.out_dir = out / "full";
  auto full_res = train::Trainer<float>(full, data.ds, cfg).train();
  ASSERT_EQ(full_res.epochs.size(), 3u);

  GrapeModel<float> part(tiny_model(), R);
  part.init(2);
  cfg.out_dir = out / "part";
  cfg.epochs = 2;
  train::Trainer<float>(part, data.ds, cfg).train();
  GrapeModel<float> resumed(tiny_model(), R);
  resumed.init(99);
  cfg.epochs = 3;
  cfg.resume = true;
  auto res = train::Trainer<float>(resumed, data.ds, cfg).train();
  ASSERT_EQ(res.epochs.size(), 1u);
  EXPECT_EQ(res.epochs[0].epoch, 3);
  EXPECT_EQ(res.epochs[0].loss, full_res.epochs[2].loss);
  const auto& a = full.params().store.entries();
  const auto& b = resumed.params().store.entries();
  for (std::size_t p = 0; p < a.size(); ++p)
    for (std::size_t i = 0; i < a[p].tensor.size(); ++i) ASSERT_EQ(a[p].tensor.values()[i], b[p].tensor.values()[i]);
  EXPECT_TRUE(std::filesystem::exists(out / "part" / "train_log.jsonl"));
  EXPECT_TRUE(res.best_checkpoint.has_value());
}

TEST(Trainer, NonFiniteParametersAbortTraining) {
  RuleData data;
  GrapeModel<float> net(tiny_model(), data.ds.train.graph.num_base_relations());
  net.init(1);
  net.params().score_w2.values()[0] = std::numeric_limits<float>::quiet_NaN();
  train::Trainer<float> tr(net, data.ds, tiny_train(1));
  EXPECT_THROW(tr.run_epoch(1), train::TrainingDiverged);
}

TEST(Trainer, GradientReachesEveryParameterGroup) {
  RuleData data;
  GrapeModel<double> net(tiny_model(), data.ds.train.graph.num_base_relations());
  net.init(3);
  auto qs = train::training_queries(data.ds.train.graph);
  std::vector<layering::Query> batch;
  for (std::size_t i = 0; i < 32; ++i) batch.push_back(qs[i].query);
  auto bg = train::build_batch(data.ds.train.index, batch, 3, {}, nullptr, 1);
  ad::Tape<double> t;
  auto bl = train::batch_loss(t, net.forward(t, bg).scores, bg);
  net.params().store.zero_grad();
  t.backward(bl.loss);
  for (const auto& e : net.params().store.entries()) {
    double n = 0;
    for (double g : e.tensor.grad()) n += g * g;
    // A constant shift of every logit cancels in the softmax, so the last bias never moves.
    if (e.name == "scorer.b2")
      EXPECT_NEAR(n, 0.0, 1e-20);
    else
      EXPECT_GT(n, 0.0) << e.name;
  }
}

TEST(TrainConfig, RejectsBadValues) {
  train::TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.lr = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
