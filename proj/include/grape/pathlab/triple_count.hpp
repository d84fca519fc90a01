#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "grape/layering/layered_subgraph.hpp"

namespace grape::pathlab {

enum class CountMethod { grape, redgnn, nbfnet, grail };

inline const char* to_string(CountMethod m) {
  switch (m) {
    case CountMethod::grape: return "grape";
    case CountMethod::redgnn: return "redgnn";
    case CountMethod::nbfnet: return "nbfnet";
    case CountMethod::grail: return "grail";
  }
  return "?";
}

struct CountOptions {
  layering::SubgraphOptions subgraph{};
  /// Add the decoder's single pass over the whole neighborhood to the grape count.
  bool include_decoder = true;
};

/// Per-query calculation counts of involved triples.
struct TripleCountReport {
  EntityId query = 0;
  int L = 0;
  std::vector<std::uint64_t> percolation_per_layer;  // |T'^l|, l = 1..L
  std::vector<std::uint64_t> hop_counts;             // n_l: neighborhood triples whose far end sits at hop l
  std::uint64_t neighborhood = 0;                    // N_q^L
  std::uint64_t augmented_total = 0;                 // |T+|
  std::uint64_t grape = 0, redgnn = 0, nbfnet = 0;
  std::uint64_t grail_lower_bound = 0;  // per-candidate enclosing subgraphs are not built
  bool decoder_included = true;

  std::uint64_t count(CountMethod m) const {
    switch (m) {
      case CountMethod::grape: return grape;
      case CountMethod::redgnn: return redgnn;
      case CountMethod::nbfnet: return nbfnet;
      case CountMethod::grail: return grail_lower_bound;
    }
    return 0;
  }
  bool ordered() const { return grape <= redgnn && redgnn <= nbfnet; }
};

inline TripleCountReport count_triples(const layering::LayeredSubgraph& sg, const AdjacencyIndex& index,
                                       CountOptions opts = {}) {
  TripleCountReport r;
  const int L = sg.horizon();
  r.query = sg.distances.query();
  r.L = L;
  r.decoder_included = opts.include_decoder;
  r.augmented_total = index.num_triples();
  for (const auto& layer : sg.layers) r.percolation_per_layer.push_back(layer.triples.size());
  r.hop_counts.assign(static_cast<std::size_t>(L), 0);
  for (const auto& t : sg.neighborhood) {
    const int far = std::max({sg.distances.raw(t.triple.head), sg.distances.raw(t.triple.tail), 1});
    ++r.hop_counts[static_cast<std::size_t>(far - 1)];
  }
  r.neighborhood = sg.neighborhood.size();

  // The encoder runs the first L-1 percolation layers; the decoder then covers G_q.
  for (int l = 1; l < L; ++l) r.grape += r.percolation_per_layer[static_cast<std::size_t>(l - 1)];
  if (opts.include_decoder) r.grape += r.neighborhood;

  r.redgnn = r.neighborhood;
  std::uint64_t prefix = 0;
  for (int l = 1; l < L; ++l) {
    prefix += r.hop_counts[static_cast<std::size_t>(l - 1)];
    r.redgnn += prefix;
  }
  r.nbfnet = static_cast<std::uint64_t>(L) * std::min(r.augmented_total, r.neighborhood);
  r.grail_lower_bound = static_cast<std::uint64_t>(L) * r.neighborhood;
  return r;
}

inline TripleCountReport count_triples(const AdjacencyIndex& index, EntityId q, int L, CountOptions opts = {},
                                       const layering::EdgeFilter& filter = {}) {
  return count_triples(layering::build_layered_subgraph(index, q, L, opts.subgraph, filter), index, opts);
}

struct TripleCountSummary {
  std::size_t queries = 0;
  double grape = 0, redgnn = 0, nbfnet = 0, grail_lower_bound = 0, neighborhood = 0;
  std::size_t ordered = 0;

  double ordered_fraction() const { return queries ? static_cast<double>(ordered) / static_cast<double>(queries) : 1.0; }
};

inline TripleCountSummary summarize(const std::vector<TripleCountReport>& reports) {
  TripleCountSummary s;
  s.queries = reports.size();
  if (reports.empty()) return s;
  long double g = 0, r = 0, n = 0, gl = 0, nb = 0;
  for (const auto& rep : reports) {
    g += rep.grape;
    r += rep.redgnn;
    n += rep.nbfnet;
    gl += rep.grail_lower_bound;
    nb += rep.neighborhood;
    s.ordered += rep.ordered();
  }
  const long double k = static_cast<long double>(reports.size());
  s.grape = static_cast<double>(g / k);
  s.redgnn = static_cast<double>(r / k);
  s.nbfnet = static_cast<double>(n / k);
  s.grail_lower_bound = static_cast<double>(gl / k);
  s.neighborhood = static_cast<double>(nb / k);
  return s;
}

}  // namespace grape::pathlab
