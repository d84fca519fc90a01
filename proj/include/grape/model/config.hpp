#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace grape::model {

enum class TransformKind { distmult, transe, rotate };
/// meanstd is the plain [mean : std] aggregator; pna adds the two logarithmic degree scalers.
enum class AggregateKind { sum, mean, meanstd, pna };
enum class Activation { relu, tanh };

inline const char* to_string(TransformKind k) {
  switch (k) {
    case TransformKind::distmult: return "distmult";
    case TransformKind::transe: return "transe";
    case TransformKind::rotate: return "rotate";
  }
  return "?";
}
inline const char* to_string(AggregateKind k) {
  switch (k) {
    case AggregateKind::sum: return "sum";
    case AggregateKind::mean: return "mean";
    case AggregateKind::meanstd: return "meanstd";
    case AggregateKind::pna: return "pna";
  }
  return "?";
}
inline const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

inline TransformKind parse_transform(const std::string& s) {
  if (s == "distmult") return TransformKind::distmult;
  if (s == "transe") return TransformKind::transe;
  if (s == "rotate") return TransformKind::rotate;
  throw std::invalid_argument("unknown transform '" + s + "'");
}
inline AggregateKind parse_aggregate(const std::string& s) {
  if (s == "sum") return AggregateKind::sum;
  if (s == "mean") return AggregateKind::mean;
  if (s == "meanstd") return AggregateKind::meanstd;
  if (s == "pna") return AggregateKind::pna;
  throw std::invalid_argument("unknown aggregate '" + s + "'");
}
inline Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

/// Width multiplier of the aggregated message relative to the stage dimension.
inline std::size_t aggregate_width(AggregateKind k) {
  switch (k) {
    case AggregateKind::sum:
    case AggregateKind::mean: return 1;
    case AggregateKind::meanstd: return 2;
    case AggregateKind::pna: return 6;
  }
  return 1;
}

struct ModelConfig {
  int L = 5;
  std::size_t d = 32;
  std::size_t d_l = 8;
  TransformKind transform = TransformKind::distmult;
  AggregateKind aggregate = AggregateKind::pna;
  bool include_same_potential = true;
  Activation activation = Activation::relu;

  void validate() const {
    if (L < 1) throw std::invalid_argument("model.L must be >= 1");
    if (d == 0) throw std::invalid_argument("model.d must be >= 1");
    if (d_l < 1 || d_l > d) throw std::invalid_argument("model.d_l must lie in [1, d]");
    if (transform == TransformKind::rotate && (d % 2 || d_l % 2))
      throw std::invalid_argument("model.transform=rotate needs even d and d_l");
  }
};

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"L", c.L},
          {"d", c.d},
          {"d_l", c.d_l},
          {"transform", to_string(c.transform)},
          {"aggregate", to_string(c.aggregate)},
          {"include_same_potential", c.include_same_potential},
          {"activation", to_string(c.activation)}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.L = j.at("L").get<int>();
  c.d = j.at("d").get<std::size_t>();
  c.d_l = j.at("d_l").get<std::size_t>();
  c.transform = parse_transform(j.at("transform").get<std::string>());
  c.aggregate = parse_aggregate(j.at("aggregate").get<std::string>());
  c.include_same_potential = j.at("include_same_potential").get<bool>();
  c.activation = parse_activation(j.at("activation").get<std::string>());
  return c;
}

}  // namespace grape::model
