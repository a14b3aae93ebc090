#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/sparse.hpp"

namespace xcb {

// Append-only record of observed bandit feedback. Contexts are stored once
// per round and referenced by id; effective arm ids are the policy's keys
// (plain arm ids in flat mode, arm-or-node keys in extreme mode).
class BanditLog {
 public:
  struct Record {
    std::uint32_t context_id;
    std::int64_t effective_arm;
    double reward;  // in [0, 1]
    std::uint32_t epoch;
  };

  std::uint32_t add_context(SparseVector x);
  void append(std::uint32_t context_id, std::int64_t effective_arm,
              double reward, std::uint32_t epoch);

  const std::vector<Record>& records() const { return records_; }
  const SparseVector& context(std::uint32_t id) const { return contexts_[id]; }
  std::size_t size() const { return records_.size(); }

  // Distinct effective arm ids present in the log.
  std::vector<std::int64_t> arm_ids() const;

 private:
  std::vector<SparseVector> contexts_;
  std::vector<Record> records_;
};

// One ridge regressor per effective arm, refit offline at epoch boundaries.
// Arms without training data predict default_prediction; every prediction
// is clamped to [0, 1] at read time.
class RegressorBank {
 public:
  RegressorBank() = default;
  RegressorBank(std::uint32_t dim, double l2_penalty,
                double default_prediction = 0.5)
      : dim_(dim), l2_penalty_(l2_penalty),
        default_prediction_(default_prediction) {}

  double predict(const SparseVector& x, std::int64_t arm_id) const;
  double raw(const SparseVector& x, std::int64_t arm_id) const;  // unclamped

  bool has(std::int64_t arm_id) const { return models_.count(arm_id) > 0; }
  const AugmentedWeights& weights(std::int64_t arm_id) const;
  void set_weights(std::int64_t arm_id, AugmentedWeights w);

  std::uint32_t dim() const { return dim_; }
  double l2_penalty() const { return l2_penalty_; }
  double default_prediction() const { return default_prediction_; }
  std::size_t trained_count() const { return models_.size(); }
  std::vector<std::int64_t> trained_ids() const;

  void save(std::ostream& os) const;
  static RegressorBank load(std::istream& is);
  void save_file(const std::string& path) const;
  static RegressorBank load_file(const std::string& path);

  bool operator==(const RegressorBank& o) const;

 private:
  std::uint32_t dim_ = 0;
  double l2_penalty_ = 1.0;
  double default_prediction_ = 0.5;
  std::unordered_map<std::int64_t, AugmentedWeights> models_;
};

// Fits one ridge regressor per requested arm id on that arm's logged
// samples: min_w sum_i (<w, x_i> + b - r_i)^2 + l2 * |w|^2, bias
// unregularized. Arms with no samples are left untrained.
RegressorBank fit(const BanditLog& log,
                  const std::vector<std::int64_t>& arm_ids,
                  std::uint32_t dim, double l2_penalty,
                  double default_prediction = 0.5);

// Single ridge fit on explicit rows; shared by the oracle, routing
// training, and the realizable-environment construction.
AugmentedWeights fit_ridge(const std::vector<const SparseVector*>& xs,
                           const std::vector<double>& targets,
                           std::uint32_t dim, double l2_penalty);

}  // namespace xcb
