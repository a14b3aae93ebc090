#include "core/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace xcb {

SparseVector::SparseVector(std::uint32_t d, std::vector<std::uint32_t> idx,
                           std::vector<double> val)
    : indices(std::move(idx)), values(std::move(val)), dim(d) {
  if (indices.size() != values.size())
    throw_numeric("SparseVector: index/value length mismatch");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i > 0 && indices[i] <= indices[i - 1])
      throw_numeric("SparseVector: indices not strictly increasing");
    if (indices[i] >= dim) throw_numeric("SparseVector: index out of range");
    if (!std::isfinite(values[i]))
      throw_numeric("SparseVector: non-finite value");
  }
  // Drop explicit zeros.
  std::size_t out = 0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (values[i] != 0.0) {
      indices[out] = indices[i];
      values[out] = values[i];
      ++out;
    }
  }
  indices.resize(out);
  values.resize(out);
}

SparseVector SparseVector::from_pairs(
    std::uint32_t dim, std::vector<std::pair<std::uint32_t, double>> pairs) {
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  idx.reserve(pairs.size());
  val.reserve(pairs.size());
  for (const auto& [i, v] : pairs) {
    if (!idx.empty() && idx.back() == i) {
      val.back() += v;
    } else {
      idx.push_back(i);
      val.push_back(v);
    }
  }
  return SparseVector(dim, std::move(idx), std::move(val));
}

double SparseVector::norm2() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

double dot(const SparseVector& a, const SparseVector& b) {
  if (a.dim != b.dim) throw_numeric("dot: dimension mismatch");
  double acc = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.indices.size() && j < b.indices.size()) {
    if (a.indices[i] < b.indices[j]) {
      ++i;
    } else if (a.indices[i] > b.indices[j]) {
      ++j;
    } else {
      acc += a.values[i] * b.values[j];
      ++i;
      ++j;
    }
  }
  return acc;
}

double dot(const SparseVector& a, std::span<const double> dense) {
  if (a.dim != dense.size()) throw_numeric("dot: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.indices.size(); ++i)
    acc += a.values[i] * dense[a.indices[i]];
  return acc;
}

SparseVector l2_normalize(const SparseVector& v) {
  double n = v.norm2();
  if (n == 0.0) throw_numeric("l2_normalize: zero vector");
  SparseVector out = v;
  for (double& x : out.values) x /= n;
  return out;
}

}  // namespace xcb
