#include "sampling/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"

namespace xcb {

namespace {

void check_scores(std::span<const double> scores) {
  if (scores.empty()) throw_numeric("empty candidate set");
  for (double s : scores)
    if (std::isnan(s)) throw_numeric("NaN score");
}

std::uint32_t argmax_lowest(std::span<const double> scores) {
  std::uint32_t best = 0;
  for (std::uint32_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

SamplingDistribution uniform_over(std::size_t n) {
  SamplingDistribution d;
  d.support.resize(n);
  std::iota(d.support.begin(), d.support.end(), 0u);
  d.probs.assign(n, 1.0 / static_cast<double>(n));
  return d;
}

}  // namespace

std::uint32_t SamplingDistribution::sample(Rng& rng) const {
  double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return support[i];
  }
  return support.back();
}

StrategyKind strategy_kind_from_string(const std::string& s) {
  if (s == "greedy") return StrategyKind::greedy;
  if (s == "igw") return StrategyKind::igw;
  if (s == "boltzmann") return StrategyKind::boltzmann;
  if (s == "epsilon-greedy" || s == "epsilon_greedy")
    return StrategyKind::epsilon_greedy;
  throw_usage("unknown strategy: " + s);
}

std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::greedy: return "greedy";
    case StrategyKind::igw: return "igw";
    case StrategyKind::boltzmann: return "boltzmann";
    case StrategyKind::epsilon_greedy: return "epsilon-greedy";
  }
  return "?";
}

GammaSchedule gamma_schedule_from_string(const std::string& s) {
  if (s == "practical") return GammaSchedule::practical;
  if (s == "theoretical-realizable" || s == "theoretical_realizable")
    return GammaSchedule::theoretical_realizable;
  if (s == "theoretical-misspecified" || s == "theoretical_misspecified")
    return GammaSchedule::theoretical_misspecified;
  throw_usage("unknown gamma schedule: " + s);
}

std::string to_string(GammaSchedule g) {
  switch (g) {
    case GammaSchedule::theoretical_realizable: return "theoretical-realizable";
    case GammaSchedule::theoretical_misspecified: return "theoretical-misspecified";
    case GammaSchedule::practical: return "practical";
  }
  return "?";
}

void StrategyConfig::validate() const {
  if (k < 1) throw_usage("k must be >= 1");
  if (r < 0 || r > k) throw_usage("r must satisfy 0 <= r <= k");
  if (kind == StrategyKind::greedy && r != 0)
    throw_usage("greedy strategy requires r = 0");
  if (igw_c < 0) throw_usage("C must be >= 0");
  if (beta < 0) throw_usage("beta must be >= 0");
  if (epsilon < 0 || epsilon > 1) throw_usage("epsilon must be in [0, 1]");
}

SamplingDistribution igw_distribution(std::span<const double> scores,
                                      double gamma) {
  check_scores(scores);
  if (std::isnan(gamma) || std::isinf(gamma) || gamma < 0)
    throw_numeric("gamma must be finite and >= 0");
  const std::size_t n = scores.size();
  if (gamma == 0.0) return uniform_over(n);

  const std::uint32_t best = argmax_lowest(scores);
  SamplingDistribution d;
  d.support.resize(n);
  std::iota(d.support.begin(), d.support.end(), 0u);
  d.probs.assign(n, 0.0);
  double rest = 0.0;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (i == best) continue;
    double gap = scores[best] - scores[i];
    d.probs[i] = 1.0 / (static_cast<double>(n) + gamma * gap);
    rest += d.probs[i];
  }
  double residual = 1.0 - rest;
  if (residual < 0.0) {
    // Possible only through rounding; the exact residual is >= 1/n.
    d.probs[best] = 0.0;
    for (double& p : d.probs) p /= rest;
  } else {
    d.probs[best] = residual;
  }
  return d;
}

SamplingDistribution boltzmann_distribution(std::span<const double> scores,
                                            double beta, double n_prev) {
  check_scores(scores);
  if (std::isnan(beta) || beta < 0) throw_numeric("beta must be >= 0");
  const std::size_t n = scores.size();
  const double temp = std::log(std::max(n_prev, 2.0)) * beta;
  const double m = *std::max_element(scores.begin(), scores.end());
  SamplingDistribution d;
  d.support.resize(n);
  std::iota(d.support.begin(), d.support.end(), 0u);
  d.probs.resize(n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d.probs[i] = std::exp(temp * (scores[i] - m));
    z += d.probs[i];
  }
  for (double& p : d.probs) p /= z;
  return d;
}

SamplingDistribution epsilon_greedy_distribution(std::span<const double> scores,
                                                 double epsilon) {
  check_scores(scores);
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw_numeric("epsilon must be in [0, 1]");
  const std::size_t n = scores.size();
  const std::uint32_t best = argmax_lowest(scores);
  SamplingDistribution d;
  d.support.resize(n);
  std::iota(d.support.begin(), d.support.end(), 0u);
  d.probs.assign(n, epsilon / static_cast<double>(n));
  d.probs[best] = (1.0 - epsilon) + epsilon / static_cast<double>(n);
  return d;
}

std::vector<std::uint32_t> rank_by_score(std::span<const double> scores) {
  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     return scores[a] > scores[b];
                   });
  return order;
}

std::vector<std::uint32_t> select_topk(std::span<const double> scores,
                                       const StrategyConfig& config,
                                       double gamma, double n_prev, Rng& rng) {
  check_scores(scores);
  const std::size_t z = scores.size();
  const std::size_t k = static_cast<std::size_t>(config.k);
  const std::size_t r = static_cast<std::size_t>(config.r);
  if (z < k) throw_numeric("select_topk: fewer candidates than slots");

  std::vector<std::uint32_t> chosen;
  chosen.reserve(k);
  const auto order = rank_by_score(scores);
  for (std::size_t i = 0; i < k - r; ++i) chosen.push_back(order[i]);

  if (r == 0) return chosen;

  std::vector<char> taken(z, 0);
  for (auto c : chosen) taken[c] = 1;
  // Remaining support in ascending index order, so lowest-index tie
  // breaking inside the distributions matches global index order.
  std::vector<std::uint32_t> remaining;
  remaining.reserve(z - chosen.size());
  for (std::uint32_t i = 0; i < z; ++i)
    if (!taken[i]) remaining.push_back(i);

  std::vector<double> sub;
  for (std::size_t c = 0; c < r; ++c) {
    sub.clear();
    for (auto i : remaining) sub.push_back(scores[i]);
    SamplingDistribution dist;
    switch (config.kind) {
      case StrategyKind::igw:
        dist = igw_distribution(sub, gamma);
        break;
      case StrategyKind::boltzmann:
        dist = boltzmann_distribution(sub, config.beta, n_prev);
        break;
      case StrategyKind::epsilon_greedy:
        dist = epsilon_greedy_distribution(sub, config.epsilon);
        break;
      case StrategyKind::greedy:
        throw_usage("greedy strategy cannot draw explore slots");
    }
    std::uint32_t pos = dist.sample(rng);
    chosen.push_back(remaining[pos]);
    remaining.erase(remaining.begin() + pos);
  }
  return chosen;
}

}  // namespace xcb
