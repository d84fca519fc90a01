#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "grape/util/parallel.hpp"
#include "grape/util/rng.hpp"

namespace grape::pathlab {

enum class TransformFamily { translation, scaling, rotation };

inline const char* to_string(TransformFamily f) {
  switch (f) {
    case TransformFamily::translation: return "translation";
    case TransformFamily::scaling: return "scaling";
    case TransformFamily::rotation: return "rotation";
  }
  return "?";
}

inline TransformFamily parse_family(const std::string& s) {
  if (s == "translation") return TransformFamily::translation;
  if (s == "scaling") return TransformFamily::scaling;
  if (s == "rotation") return TransformFamily::rotation;
  throw std::invalid_argument("unknown transform family '" + s + "' (expected translation, scaling or rotation)");
}

struct EntropySimConfig {
  static constexpr std::size_t kMinSamples = 10'000;

  TransformFamily family = TransformFamily::rotation;
  std::size_t d = 16;
  double sigma2 = 1.0;
  int hops = 8;
  std::size_t samples = 20'000;
  std::uint64_t seed = 7;
  unsigned threads = 1;

  // Aggregation experiment: m shortest paths of length ell that share their first
  // `shared_prefix` triples, plus one redundant copy of path 1 with an alpha-triple detour.
  std::size_t m = 3;
  int ell = 4;
  int shared_prefix = 1;
  int alpha = 2;
};

/// Variance is the per-coordinate unbiased variance averaged over coordinates.
struct VarianceEstimate {
  double variance = 0;
  double se = 0;
};

struct EntropySimReport {
  EntropySimConfig config;
  std::vector<VarianceEstimate> per_hop;  // index k = 0..hops
  std::vector<double> per_hop_expected;
  bool monotone = true;

  VarianceEstimate before, after;
  double increase = 0, increase_se = 0;
  double bound = 0;               // alpha * sigma2 / (m+1)^2
  double analytic_after = NAN;    // closed form when A = I
  double analytic_before = NAN;
  double C_m = 0;                 // sum over i != j of Cov(P_i, P_j)
  double base_path_cov = 0;       // sum over i != 1 of Cov(P_i, P_1)
  bool covariance_approx_holds = false;
  bool increase_significant = false;  // increase > 3 standard errors
  bool bound_respected = false;       // increase + 3 se >= bound
};

namespace detail {

using Mat = std::vector<double>;  // row-major d x d

struct Transform {
  Mat A;
  std::vector<double> b;
};

inline Mat identity(std::size_t d) {
  Mat a(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) a[i * d + i] = 1.0;
  return a;
}

inline Mat random_orthogonal(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Mat q(d * d);
  for (auto& v : q) v = n01(rng);
  // Gram-Schmidt over rows
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double dot = 0;
      for (std::size_t c = 0; c < d; ++c) dot += q[i * d + c] * q[j * d + c];
      for (std::size_t c = 0; c < d; ++c) q[i * d + c] -= dot * q[j * d + c];
    }
    double nrm = 0;
    for (std::size_t c = 0; c < d; ++c) nrm += q[i * d + c] * q[i * d + c];
    nrm = std::sqrt(nrm);
    for (std::size_t c = 0; c < d; ++c) q[i * d + c] /= nrm;
  }
  return q;
}

class TransformFactory {
 public:
  TransformFactory(TransformFamily f, std::size_t d, std::uint64_t seed) : family_(f), d_(d), rng_(seed) {
    std::uniform_real_distribution<double> u(0.5, 1.5);
    diag_.resize(d);
    for (auto& a : diag_) a = u(rng_);
  }
  Transform next() {
    Transform t;
    std::normal_distribution<double> n01;
    t.b.resize(d_);
    for (auto& v : t.b) v = n01(rng_);
    switch (family_) {
      case TransformFamily::translation: t.A = identity(d_); break;
      case TransformFamily::scaling:
        t.A.assign(d_ * d_, 0.0);
        for (std::size_t i = 0; i < d_; ++i) t.A[i * d_ + i] = diag_[i];
        break;
      case TransformFamily::rotation: t.A = random_orthogonal(d_, rng_); break;
    }
    return t;
  }
  const std::vector<double>& diagonal() const noexcept { return diag_; }

 private:
  TransformFamily family_;
  std::size_t d_;
  std::mt19937_64 rng_;
  std::vector<double> diag_;
};

inline void apply(const Transform& t, const std::vector<double>& noise, std::vector<double>& e, std::vector<double>& tmp) {
  const std::size_t d = e.size();
  for (std::size_t i = 0; i < d; ++i) {
    double s = t.b[i] + noise[i];
    for (std::size_t c = 0; c < d; ++c) s += t.A[i * d + c] * e[c];
    tmp[i] = s;
  }
  e.swap(tmp);
}

/// samples: n x d row-major
inline VarianceEstimate estimate(const std::vector<double>& x, std::size_t n, std::size_t d, std::vector<double>* u_out = nullptr) {
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) mean[c] += x[i * d + c];
  for (auto& m : mean) m /= static_cast<double>(n);
  std::vector<double> u(n);
  double su = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t c = 0; c < d; ++c) {
      const double z = x[i * d + c] - mean[c];
      s += z * z;
    }
    u[i] = s / static_cast<double>(d);
    su += u[i];
  }
  const double mu = su / static_cast<double>(n);
  double ss = 0;
  for (double v : u) ss += (v - mu) * (v - mu);
  const double nn = static_cast<double>(n);
  VarianceEstimate est;
  est.variance = mu * nn / (nn - 1.0);
  est.se = std::sqrt(ss / (nn - 1.0)) / std::sqrt(nn);
  if (u_out) *u_out = std::move(u);
  return est;
}

/// Mean over coordinates of the sample covariance between two n x d sample sets.
inline double cross_cov(const std::vector<double>& x, const std::vector<double>& y, std::size_t n, std::size_t d) {
  double total = 0;
  for (std::size_t c = 0; c < d; ++c) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += x[i * d + c];
      my += y[i * d + c];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += (x[i * d + c] - mx) * (y[i * d + c] - my);
    total += s / static_cast<double>(n - 1);
  }
  return total / static_cast<double>(d);
}

}  // namespace detail

inline EntropySimReport simulate_error_entropy(const EntropySimConfig& cfg) {
  if (cfg.samples < EntropySimConfig::kMinSamples)
    throw std::invalid_argument("entropy simulation needs at least 10000 samples");
  if (cfg.d == 0 || cfg.hops < 0 || cfg.m == 0 || cfg.ell < 1 || cfg.alpha < 0 || cfg.shared_prefix < 0 ||
      cfg.shared_prefix > cfg.ell || cfg.sigma2 < 0)
    throw std::invalid_argument("entropy simulation: invalid shape parameters");
  if (cfg.m > 1 && cfg.shared_prefix == cfg.ell)
    throw std::invalid_argument("entropy simulation: distinct paths need shared_prefix < ell");

  EntropySimReport rep;
  rep.config = cfg;
  const std::size_t d = cfg.d, n = cfg.samples;
  const double sigma = std::sqrt(cfg.sigma2);

  // Hop chain.
  detail::TransformFactory hop_factory(cfg.family, d, util::derive_seed(cfg.seed, 0xA11CE));
  std::vector<detail::Transform> hop_t;
  for (int k = 0; k < cfg.hops; ++k) hop_t.push_back(hop_factory.next());
  std::vector<std::vector<double>> hop_x(static_cast<std::size_t>(cfg.hops) + 1, std::vector<double>(n * d));
  util::parallel_for(n, cfg.threads, [&](std::size_t i) {
    std::mt19937_64 rng(util::derive_seed(cfg.seed, i));
    std::normal_distribution<double> eps(0.0, sigma);
    std::vector<double> e(d, 1.0), tmp(d), noise(d);
    std::copy(e.begin(), e.end(), hop_x[0].begin() + static_cast<std::ptrdiff_t>(i * d));
    for (int k = 0; k < cfg.hops; ++k) {
      for (auto& v : noise) v = eps(rng);
      detail::apply(hop_t[static_cast<std::size_t>(k)], noise, e, tmp);
      std::copy(e.begin(), e.end(), hop_x[static_cast<std::size_t>(k) + 1].begin() + static_cast<std::ptrdiff_t>(i * d));
    }
  });
  for (int k = 0; k <= cfg.hops; ++k) {
    rep.per_hop.push_back(detail::estimate(hop_x[static_cast<std::size_t>(k)], n, d));
    double expected = 0;
    if (cfg.family == TransformFamily::scaling) {
      for (double a : hop_factory.diagonal()) {
        double s = 0, p = 1;
        for (int j = 0; j < k; ++j, p *= a * a) s += p;
        expected += cfg.sigma2 * s;
      }
      expected /= static_cast<double>(d);
    } else {
      expected = k * cfg.sigma2;
    }
    rep.per_hop_expected.push_back(expected);
    if (k > 0 && rep.per_hop[k].variance + 3 * rep.per_hop[k].se < rep.per_hop[k - 1].variance) rep.monotone = false;
  }
  hop_x.clear();

  // Path-set aggregation. Triple table: shared prefix, per-path branches, detour.
  detail::TransformFactory path_factory(cfg.family, d, util::derive_seed(cfg.seed, 0xB0B));
  const auto s = static_cast<std::size_t>(cfg.shared_prefix), ell = static_cast<std::size_t>(cfg.ell);
  std::vector<detail::Transform> triples;
  std::vector<std::vector<std::size_t>> paths(cfg.m);
  for (std::size_t k = 0; k < s; ++k) triples.push_back(path_factory.next());
  for (std::size_t p = 0; p < cfg.m; ++p) {
    for (std::size_t k = 0; k < s; ++k) paths[p].push_back(k);
    for (std::size_t k = s; k < ell; ++k) {
      paths[p].push_back(triples.size());
      triples.push_back(path_factory.next());
    }
  }
  std::vector<std::size_t> redundant;
  for (int k = 0; k < cfg.alpha; ++k) {  // a closed detour at the query before following path 1
    redundant.push_back(triples.size());
    triples.push_back(path_factory.next());
  }
  redundant.insert(redundant.end(), paths[0].begin(), paths[0].end());

  const std::size_t P = cfg.m + 1;
  std::vector<std::vector<double>> path_x(P, std::vector<double>(n * d));
  util::parallel_for(n, cfg.threads, [&](std::size_t i) {
    std::mt19937_64 rng(util::derive_seed(cfg.seed ^ 0x5EEDULL, i));
    std::normal_distribution<double> eps(0.0, sigma);
    std::vector<std::vector<double>> noise(triples.size(), std::vector<double>(d));
    for (auto& nv : noise)
      for (auto& v : nv) v = eps(rng);
    std::vector<double> e(d), tmp(d);
    for (std::size_t p = 0; p < P; ++p) {
      const auto& seq = p < cfg.m ? paths[p] : redundant;
      std::fill(e.begin(), e.end(), 1.0);
      for (std::size_t t : seq) detail::apply(triples[t], noise[t], e, tmp);
      std::copy(e.begin(), e.end(), path_x[p].begin() + static_cast<std::ptrdiff_t>(i * d));
    }
  });

  std::vector<double> agg_before(n * d), agg_after(n * d);
  for (std::size_t j = 0; j < n * d; ++j) {
    double sb = 0;
    for (std::size_t p = 0; p < cfg.m; ++p) sb += path_x[p][j];
    agg_before[j] = sb / static_cast<double>(cfg.m);
    agg_after[j] = (sb + path_x[cfg.m][j]) / static_cast<double>(P);
  }
  std::vector<double> ub, ua;
  rep.before = detail::estimate(agg_before, n, d, &ub);
  rep.after = detail::estimate(agg_after, n, d, &ua);
  {
    double mu = 0;
    for (std::size_t i = 0; i < n; ++i) mu += ua[i] - ub[i];
    mu /= static_cast<double>(n);
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) ss += (ua[i] - ub[i] - mu) * (ua[i] - ub[i] - mu);
    rep.increase = rep.after.variance - rep.before.variance;
    rep.increase_se = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
  }
  const double m = static_cast<double>(cfg.m);
  rep.bound = cfg.alpha * cfg.sigma2 / ((m + 1) * (m + 1));
  if (cfg.family == TransformFamily::translation) {
    const double l = cfg.ell, sp = cfg.shared_prefix, a = cfg.alpha;
    rep.analytic_before = (m * l + m * (m - 1) * sp) * cfg.sigma2 / (m * m);
    rep.analytic_after = (m * l + m * (m - 1) * sp + (l + a) + 2 * (l + (m - 1) * sp)) * cfg.sigma2 / ((m + 1) * (m + 1));
  }
  for (std::size_t i = 0; i < cfg.m; ++i)
    for (std::size_t j = 0; j < cfg.m; ++j)
      if (i != j) {
        const double c = detail::cross_cov(path_x[i], path_x[j], n, d);
        rep.C_m += c;
        if (j == 0) rep.base_path_cov += c;
      }
  const double approx = rep.C_m / m;
  rep.covariance_approx_holds = std::abs(rep.base_path_cov - approx) <= 0.1 * std::max(std::abs(approx), cfg.sigma2);
  rep.increase_significant = rep.increase > 3 * rep.increase_se;
  rep.bound_respected = rep.increase + 3 * rep.increase_se >= rep.bound;
  return rep;
}

inline nlohmann::json to_json(const EntropySimReport& r) {
  nlohmann::json j;
  const auto& c = r.config;
  j["config"] = {{"family", to_string(c.family)}, {"d", c.d},           {"sigma2", c.sigma2},
                 {"hops", c.hops},                 {"samples", c.samples}, {"seed", c.seed},
                 {"threads", c.threads},           {"m", c.m},           {"ell", c.ell},
                 {"shared_prefix", c.shared_prefix}, {"alpha", c.alpha}};
  auto& hops = j["per_hop"] = nlohmann::json::array();
  for (std::size_t k = 0; k < r.per_hop.size(); ++k)
    hops.push_back({{"k", k}, {"variance", r.per_hop[k].variance}, {"se", r.per_hop[k].se},
                    {"expected", r.per_hop_expected[k]}});
  j["monotone"] = r.monotone;
  j["aggregation"] = {{"before", r.before.variance},
                      {"before_se", r.before.se},
                      {"after", r.after.variance},
                      {"after_se", r.after.se},
                      {"increase", r.increase},
                      {"increase_se", r.increase_se},
                      {"bound", r.bound},
                      {"C_m", r.C_m},
                      {"base_path_cov", r.base_path_cov},
                      {"covariance_approx_holds", r.covariance_approx_holds},
                      {"increase_significant", r.increase_significant},
                      {"bound_respected", r.bound_respected}};
  if (!std::isnan(r.analytic_after)) {
    j["aggregation"]["analytic_before"] = r.analytic_before;
    j["aggregation"]["analytic_after"] = r.analytic_after;
  }
  return j;
}

}  // namespace grape::pathlab
