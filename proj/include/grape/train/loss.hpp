#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "grape/ad/tape.hpp"
#include "grape/layering/batch_graph.hpp"

namespace grape::train {

/// Multi-class cross entropy of one query: -s_answer + log sum_e exp(s_e).
inline double training_loss(std::span<const double> scores, std::size_t answer) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double s : scores) mx = std::max(mx, s);
  double acc = 0;
  for (double s : scores) acc += std::exp(s - mx);
  return -scores[answer] + mx + std::log(acc);
}

template <std::floating_point T>
struct BatchLoss {
  ad::Tensor<T> loss;  // summed over the used queries; undefined when none was usable
  std::size_t used = 0;
  std::size_t skipped = 0;  // answer outside the query's L-hop neighborhood
};

/// Sums the per-query cross entropy over the scored nodes of each query. Queries whose
/// answer was not reached are skipped.
template <std::floating_point T>
BatchLoss<T> batch_loss(ad::Tape<T>& tape, const ad::Tensor<T>& scores, const layering::BatchGraph& bg) {
  BatchLoss<T> out;
  std::vector<std::int32_t> valid, answers;
  for (std::size_t b = 0; b < bg.num_queries(); ++b) {
    if (bg.answer_node[b] < 0) {
      ++out.skipped;
      continue;
    }
    valid.push_back(static_cast<std::int32_t>(b));
    answers.push_back(bg.answer_node[b]);
  }
  out.used = valid.size();
  if (valid.empty()) return out;
  auto lse = tape.segment_logsumexp(scores, bg.node_query, bg.num_queries());
  auto pos = tape.sum(tape.gather(scores, std::span<const std::int32_t>(answers)));
  auto norm = tape.sum(tape.gather(lse, std::span<const std::int32_t>(valid)));
  out.loss = tape.sub(norm, pos);
  return out;
}

}  // namespace grape::train
