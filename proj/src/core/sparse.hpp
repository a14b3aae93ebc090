#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace xcb {

// Sparse vector with strictly increasing indices and no stored zeros.
// Immutable by convention once constructed; all operations are pure.
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
  std::uint32_t dim = 0;

  SparseVector() = default;
  SparseVector(std::uint32_t dim, std::vector<std::uint32_t> idx,
               std::vector<double> val);

  // Builds from unordered (index, value) pairs: sorts, sums duplicate
  // indices, drops exact zeros.
  static SparseVector from_pairs(std::uint32_t dim,
                                 std::vector<std::pair<std::uint32_t, double>> pairs);

  std::size_t nnz() const { return indices.size(); }
  double norm2() const;

  bool operator==(const SparseVector& o) const = default;
};

double dot(const SparseVector& a, const SparseVector& b);
double dot(const SparseVector& a, std::span<const double> dense);

// Scales v to Euclidean norm 1. All-zero input is an error; callers pick
// their own fallback.
SparseVector l2_normalize(const SparseVector& v);

// Linear model on the [x; 1] augmented context: raw(x) = <weights, x> + bias.
struct AugmentedWeights {
  SparseVector weights;
  double bias = 0.0;

  double raw(const SparseVector& x) const { return dot(weights, x) + bias; }

  bool operator==(const AugmentedWeights& o) const = default;
};

}  // namespace xcb
