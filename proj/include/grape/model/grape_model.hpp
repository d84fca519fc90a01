#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "grape/ad/params.hpp"
#include "grape/ad/tape.hpp"
#include "grape/layering/batch_graph.hpp"
#include "grape/model/config.hpp"

namespace grape::model {

enum class Stage { encoder, decoder };

/// Triple computations performed by the last forward pass.
struct ForwardStats {
  std::size_t encoder_triples = 0;
  std::size_t decoder_triples = 0;
  std::size_t zero_denominators = 0;
  std::size_t total() const { return encoder_triples + decoder_triples; }
};

/// Every trainable tensor of the network. Relation machinery costs O(|R|d + d^2): a relation
/// table per stage plus one query-mixing matrix, instead of one matrix per relation.
template <std::floating_point T>
struct ModelParams {
  ad::ParamStore<T> store;
  ad::Tensor<T> enc_relation, enc_query_mix, enc_weight, enc_bias;
  ad::Tensor<T> cmp_w1, cmp_b1, cmp_w2, cmp_b2;
  ad::Tensor<T> dec_relation, dec_query_mix, dec_weight, dec_bias;
  ad::Tensor<T> score_w1, score_b1, score_w2, score_b2;

  ModelParams() = default;
  ModelParams(const ModelConfig& cfg, std::size_t num_relations) {
    const std::size_t d = cfg.d, dl = cfg.d_l, w = aggregate_width(cfg.aggregate);
    enc_relation = store.add("encoder.relation", num_relations, d);
    enc_query_mix = store.add("encoder.query_mix", d, d);
    enc_weight = store.add("encoder.layer.weight", w * d, d);
    enc_bias = store.add("encoder.layer.bias", 1, d);
    cmp_w1 = store.add("compressor.w1", 2 * d, d);
    cmp_b1 = store.add("compressor.b1", 1, d);
    cmp_w2 = store.add("compressor.w2", d, dl);
    cmp_b2 = store.add("compressor.b2", 1, dl);
    dec_relation = store.add("decoder.relation", num_relations, dl);
    dec_query_mix = store.add("decoder.query_mix", dl, dl);
    dec_weight = store.add("decoder.layer.weight", w * dl, dl);
    dec_bias = store.add("decoder.layer.bias", 1, dl);
    score_w1 = store.add("scorer.w1", 2 * dl, dl);
    score_b1 = store.add("scorer.b1", 1, dl);
    score_w2 = store.add("scorer.w2", dl, 1);
    score_b2 = store.add("scorer.b2", 1, 1);
  }

  std::size_t parameter_count() const { return store.parameter_count(); }
};

/// Closed-form parameter count, matching ModelParams.
inline std::size_t parameter_count(const ModelConfig& cfg, std::size_t num_base_relations) {
  const std::size_t R = 2 * num_base_relations + 1, d = cfg.d, dl = cfg.d_l, w = aggregate_width(cfg.aggregate);
  return R * d + d * d + (w * d * d + d) + (2 * d * d + d) + (d * dl + dl) + R * dl + dl * dl + (w * dl * dl + dl) +
         (2 * dl * dl + dl) + (dl + 1);
}

template <std::floating_point T>
class GrapeModel {
 public:
  using Tensor = ad::Tensor<T>;
  using Tape = ad::Tape<T>;

  GrapeModel(ModelConfig cfg, std::size_t num_base_relations)
      : cfg_(validated(cfg)), num_relations_(2 * num_base_relations + 1), params_(cfg_, num_relations_) {}

  const ModelConfig& config() const noexcept { return cfg_; }
  ModelParams<T>& params() noexcept { return params_; }
  const ModelParams<T>& params() const noexcept { return params_; }
  std::size_t num_relations() const noexcept { return num_relations_; }
  std::size_t parameter_count() const { return params_.parameter_count(); }
  const ForwardStats& last_stats() const noexcept { return stats_; }

  /// The encoder weight applied at layer l; one tensor serves every layer.
  const Tensor& encoder_weight(int /*layer*/) const { return params_.enc_weight; }

  void init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (const auto& e : params_.store.entries()) {
      auto t = e.tensor;
      if (e.name.ends_with(".relation"))
        ad::normal_init(t, 0.1, rng);
      else if (t.rows() == 1)  // biases
        std::fill(t.values().begin(), t.values().end(), T(0));
      else
        ad::glorot_uniform(t, rng);
    }
  }

  // ---- building blocks ---------------------------------------------------------------

  /// r_{i|q} = B[r_i] + B[r_q] G for each (r_i, r_q) pair.
  Tensor relation_embed(Tape& tape, std::span<const std::uint32_t> r_i, std::span<const std::uint32_t> r_q,
                        Stage stage) const {
    const auto& B = stage == Stage::encoder ? params_.enc_relation : params_.dec_relation;
    const auto& G = stage == Stage::encoder ? params_.enc_query_mix : params_.dec_query_mix;
    return tape.add(tape.gather(B, r_i), tape.matmul(tape.gather(B, r_q), G));
  }

  Tensor transform(Tape& tape, const Tensor& e, const Tensor& r) const {
    switch (cfg_.transform) {
      case TransformKind::distmult: return tape.hadamard(e, r);
      case TransformKind::transe: return tape.add(e, r);
      case TransformKind::rotate: return tape.rotate_pairs(e, r);
    }
    return e;
  }

  /// Aggregates messages into `num_targets` rows with global-degree normalisation.
  Tensor aggregate(Tape& tape, const Tensor& messages, std::span<const std::int32_t> slot, std::size_t num_targets,
                   std::span<const float> degree, double mean_log_degree) {
    std::vector<T> denom(num_targets);
    for (std::size_t i = 0; i < num_targets; ++i) {
      if (degree[i] <= 0.0f) {
        ++stats_.zero_denominators;
        denom[i] = T(1);
      } else {
        denom[i] = static_cast<T>(degree[i]);
      }
    }
    switch (cfg_.aggregate) {
      case AggregateKind::sum: return tape.segment_reduce(messages, slot, num_targets, ad::SegmentMode::sum, denom);
      case AggregateKind::mean: return tape.segment_reduce(messages, slot, num_targets, ad::SegmentMode::mean, denom);
      case AggregateKind::meanstd:
      case AggregateKind::pna: {
        auto ms = tape.concat(tape.segment_reduce(messages, slot, num_targets, ad::SegmentMode::mean, denom),
                              tape.segment_reduce(messages, slot, num_targets, ad::SegmentMode::std, denom));
        if (cfg_.aggregate == AggregateKind::meanstd) return ms;
        const double delta = mean_log_degree > 0 ? mean_log_degree : 1.0;
        std::vector<T> amp(num_targets), att(num_targets);
        for (std::size_t i = 0; i < num_targets; ++i) {
          const double lg = std::log(static_cast<double>(denom[i]) + 1.0);
          amp[i] = static_cast<T>(lg / delta);
          att[i] = static_cast<T>(delta / lg);
        }
        return tape.concat({ms, tape.row_scale(ms, amp), tape.row_scale(ms, att)});
      }
    }
    return messages;
  }

  Tensor activate(Tape& tape, const Tensor& x) const {
    return cfg_.activation == Activation::relu ? tape.relu(x) : tape.tanh(x);
  }

  Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) const {
    return tape.add_bias(tape.matmul(x, w), b);
  }

  /// Two-layer compressor: [e : r_q] (2d) -> d -> d_l, activation after both layers.
  Tensor compress(Tape& tape, const Tensor& e, const Tensor& rq) const {
    auto h = activate(tape, linear(tape, tape.concat(e, rq), params_.cmp_w1, params_.cmp_b1));
    return activate(tape, linear(tape, h, params_.cmp_w2, params_.cmp_b2));
  }

  /// Scoring head on [e_hat : r_q]: 2 d_l -> d_l -> 1, raw logits.
  Tensor score(Tape& tape, const Tensor& e_hat, const Tensor& rq_dec) const {
    auto h = activate(tape, linear(tape, tape.concat(e_hat, rq_dec), params_.score_w1, params_.score_b1));
    return linear(tape, h, params_.score_w2, params_.score_b2);
  }

  // ---- full passes --------------------------------------------------------------------

  /// Percolation encoder over layers 1..L-1 with tied weights and the layer-sum residual.
  Tensor encode(Tape& tape, const layering::BatchGraph& bg) {
    const std::size_t N = bg.num_nodes(), d = cfg_.d;
    Tensor h(N, d);
    for (auto qn : bg.query_node)
      for (std::size_t j = 0; j < d; ++j) h.at(static_cast<std::size_t>(qn), j) = T(1);
    const auto rq = query_relations(bg);
    auto mixed = tape.matmul(tape.gather(params_.enc_relation, std::span<const std::uint32_t>(rq)), params_.enc_query_mix);
    const int layers = std::min<int>(cfg_.L - 1, static_cast<int>(bg.layers.size()));
    for (int l = 1; l <= layers; ++l) {
      const auto& el = bg.layers[static_cast<std::size_t>(l - 1)];
      if (el.size() == 0) continue;
      stats_.encoder_triples += el.size();
      auto r = tape.add(tape.gather(params_.enc_relation, std::span<const std::uint32_t>(el.rel)),
                        tape.gather(mixed, std::span<const std::int32_t>(el.query)));
      auto msg = transform(tape, tape.gather(h, std::span<const std::int32_t>(el.src)), r);
      auto agg = aggregate(tape, msg, el.slot, el.targets.size(), target_degrees(bg, el.targets), bg.mean_log_degree);
      auto out = activate(tape, linear(tape, agg, params_.enc_weight, params_.enc_bias));
      h = tape.add(h, tape.index_add(out, el.targets, N));
    }
    return h;
  }

  /// One propagation pass over the whole neighborhood at the decoder dimension.
  Tensor decode(Tape& tape, const layering::BatchGraph& bg, const Tensor& compressed) {
    const auto& el = bg.neighborhood;
    if (el.size() == 0) return compressed;
    stats_.decoder_triples += el.size();
    const auto rq = query_relations(bg);
    auto mixed = tape.matmul(tape.gather(params_.dec_relation, std::span<const std::uint32_t>(rq)), params_.dec_query_mix);
    auto r = tape.add(tape.gather(params_.dec_relation, std::span<const std::uint32_t>(el.rel)),
                      tape.gather(mixed, std::span<const std::int32_t>(el.query)));
    auto msg = transform(tape, tape.gather(compressed, std::span<const std::int32_t>(el.src)), r);
    auto agg = aggregate(tape, msg, el.slot, el.targets.size(), bg.node_degree, bg.mean_log_degree);
    return tape.add(activate(tape, linear(tape, agg, params_.dec_weight, params_.dec_bias)), compressed);
  }

  struct Output {
    Tensor scores;       // num_nodes x 1
    Tensor encoded;      // num_nodes x d
    Tensor compressed;   // num_nodes x d_l
    Tensor decoded;      // num_nodes x d_l
  };

  Output forward(Tape& tape, const layering::BatchGraph& bg) {
    stats_ = {};
    Output o;
    o.encoded = encode(tape, bg);
    const auto rq = query_relations(bg);
    auto rq_enc = tape.gather(tape.gather(params_.enc_relation, std::span<const std::uint32_t>(rq)),
                              std::span<const std::int32_t>(bg.node_query));
    o.compressed = compress(tape, o.encoded, rq_enc);
    o.decoded = decode(tape, bg, o.compressed);
    auto rq_dec = tape.gather(tape.gather(params_.dec_relation, std::span<const std::uint32_t>(rq)),
                              std::span<const std::int32_t>(bg.node_query));
    o.scores = score(tape, o.decoded, rq_dec);
    return o;
  }

 private:
  static ModelConfig validated(ModelConfig c) {
    c.validate();
    return c;
  }

  static std::vector<std::uint32_t> query_relations(const layering::BatchGraph& bg) {
    std::vector<std::uint32_t> rq;
    rq.reserve(bg.queries.size());
    for (const auto& q : bg.queries) rq.push_back(q.r_q);
    return rq;
  }

  std::span<const float> target_degrees(const layering::BatchGraph& bg, const std::vector<std::int32_t>& targets) {
    degree_buf_.resize(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) degree_buf_[i] = bg.node_degree[static_cast<std::size_t>(targets[i])];
    return degree_buf_;
  }

  ModelConfig cfg_;
  std::size_t num_relations_;
  ModelParams<T> params_;
  ForwardStats stats_;
  std::vector<float> degree_buf_;
};

}  // namespace grape::model
