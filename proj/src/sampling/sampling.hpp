#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/rng.hpp"

namespace xcb {

// Explicit probability vector over candidate positions [0, n). Callers map
// positions back to their own arm ids.
struct SamplingDistribution {
  std::vector<std::uint32_t> support;
  std::vector<double> probs;

  // Inverse-CDF draw over the stored order with a single uniform variate.
  std::uint32_t sample(Rng& rng) const;
};

enum class StrategyKind { greedy, igw, boltzmann, epsilon_greedy };
enum class GammaSchedule { theoretical_realizable, theoretical_misspecified, practical };

StrategyKind strategy_kind_from_string(const std::string& s);
std::string to_string(StrategyKind k);
GammaSchedule gamma_schedule_from_string(const std::string& s);
std::string to_string(GammaSchedule g);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::igw;
  GammaSchedule gamma_schedule = GammaSchedule::practical;
  double igw_c = 1.0;       // practical-schedule constant C
  double beta = 1.0;        // Boltzmann inverse-temperature factor
  double epsilon = 0.167;   // epsilon-greedy exploration rate
  int k = 5;                // slots per round
  int r = 3;                // explore slots, 0 <= r <= k

  void validate() const;  // throws Error(usage) on bad combinations
};

// Inverse Gap Weighting over one candidate set. For a != a*,
// p(a) = 1 / (n + gamma * (score(a*) - score(a))); a* keeps the residual
// mass. gamma == 0 yields the exact uniform distribution.
SamplingDistribution igw_distribution(std::span<const double> scores,
                                      double gamma);

// Softmax with inverse temperature log(max(n_prev, 2)) * beta, computed
// with max-subtraction.
SamplingDistribution boltzmann_distribution(std::span<const double> scores,
                                            double beta, double n_prev);

// Argmax gets (1 - eps) + eps/n, everyone else eps/n.
SamplingDistribution epsilon_greedy_distribution(std::span<const double> scores,
                                                 double epsilon);

// Sequential k-slot selection: the first k-r slots are the greedy top
// (lowest index wins ties); the remaining r are drawn one at a time from
// the configured distribution restricted to the remaining support, with
// the IGW additive term equal to the remaining-support size.
std::vector<std::uint32_t> select_topk(std::span<const double> scores,
                                       const StrategyConfig& config,
                                       double gamma, double n_prev, Rng& rng);

// Candidate positions ordered by (score desc, index asc).
std::vector<std::uint32_t> rank_by_score(std::span<const double> scores);

}  // namespace xcb
