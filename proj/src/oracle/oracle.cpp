#include "oracle/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "core/binio.hpp"
#include "core/error.hpp"

namespace xcb {

std::uint32_t BanditLog::add_context(SparseVector x) {
  contexts_.push_back(std::move(x));
  return static_cast<std::uint32_t>(contexts_.size() - 1);
}

void BanditLog::append(std::uint32_t context_id, std::int64_t effective_arm,
                       double reward, std::uint32_t epoch) {
  if (context_id >= contexts_.size())
    throw_numeric("BanditLog: unknown context id");
  if (!(reward >= 0.0 && reward <= 1.0))
    throw_numeric("BanditLog: reward outside [0, 1]");
  records_.push_back({context_id, effective_arm, reward, epoch});
}

std::vector<std::int64_t> BanditLog::arm_ids() const {
  std::vector<std::int64_t> ids;
  ids.reserve(records_.size());
  for (const auto& r : records_) ids.push_back(r.effective_arm);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

double RegressorBank::raw(const SparseVector& x, std::int64_t arm_id) const {
  auto it = models_.find(arm_id);
  if (it == models_.end()) return default_prediction_;
  if (x.dim != dim_) throw_numeric("predict: dimension mismatch");
  return it->second.raw(x);
}

double RegressorBank::predict(const SparseVector& x, std::int64_t arm_id) const {
  return std::clamp(raw(x, arm_id), 0.0, 1.0);
}

const AugmentedWeights& RegressorBank::weights(std::int64_t arm_id) const {
  auto it = models_.find(arm_id);
  if (it == models_.end()) throw_numeric("no regressor for arm");
  return it->second;
}

void RegressorBank::set_weights(std::int64_t arm_id, AugmentedWeights w) {
  models_[arm_id] = std::move(w);
}

std::vector<std::int64_t> RegressorBank::trained_ids() const {
  std::vector<std::int64_t> ids;
  ids.reserve(models_.size());
  for (const auto& [id, _] : models_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool RegressorBank::operator==(const RegressorBank& o) const {
  return dim_ == o.dim_ && l2_penalty_ == o.l2_penalty_ &&
         default_prediction_ == o.default_prediction_ && models_ == o.models_;
}

namespace {
constexpr char kBankMagic[4] = {'X', 'C', 'B', 'R'};
constexpr std::uint32_t kBankVersion = 1;
}  // namespace

void RegressorBank::save(std::ostream& os) const {
  write_magic(os, kBankMagic, kBankVersion);
  write_pod<std::uint32_t>(os, dim_);
  write_pod<double>(os, l2_penalty_);
  write_pod<double>(os, default_prediction_);
  write_pod<std::uint64_t>(os, models_.size());
  for (auto id : trained_ids()) {
    const auto& w = models_.at(id);
    write_pod<std::int64_t>(os, id);
    write_vec(os, w.weights.indices);
    write_vec(os, w.weights.values);
    write_pod<double>(os, w.bias);
  }
}

RegressorBank RegressorBank::load(std::istream& is) {
  auto version = read_magic(is, kBankMagic);
  if (version != kBankVersion) throw_io("unsupported regressor bank version");
  RegressorBank bank;
  bank.dim_ = read_pod<std::uint32_t>(is);
  bank.l2_penalty_ = read_pod<double>(is);
  bank.default_prediction_ = read_pod<double>(is);
  auto count = read_pod<std::uint64_t>(is);
  for (std::uint64_t i = 0; i < count; ++i) {
    auto id = read_pod<std::int64_t>(is);
    AugmentedWeights w;
    auto idx = read_vec<std::uint32_t>(is);
    auto val = read_vec<double>(is);
    w.weights = SparseVector(bank.dim_, std::move(idx), std::move(val));
    w.bias = read_pod<double>(is);
    bank.models_.emplace(id, std::move(w));
  }
  return bank;
}

void RegressorBank::save_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw_io("cannot open for writing: " + path);
  save(os);
  if (!os) throw_io("write failed: " + path);
}

RegressorBank RegressorBank::load_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw_io("cannot open: " + path);
  return load(is);
}

AugmentedWeights fit_ridge(const std::vector<const SparseVector*>& xs,
                           const std::vector<double>& targets,
                           std::uint32_t dim, double l2_penalty) {
  if (xs.size() != targets.size())
    throw_numeric("fit_ridge: row/target count mismatch");
  const std::size_t n = xs.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(targets[i])) throw_numeric("fit_ridge: non-finite target");
    if (xs[i]->dim != dim) throw_numeric("fit_ridge: dimension mismatch");
  }
  if (n == 0) return AugmentedWeights{SparseVector(dim, {}, {}), 0.0};

  // Active feature set; weights off it are exactly zero at the optimum.
  std::vector<std::uint32_t> active;
  for (const auto* x : xs)
    active.insert(active.end(), x->indices.begin(), x->indices.end());
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());
  const std::size_t na = active.size();
  const std::size_t nv = na + 1;  // + bias

  // Rows remapped to local feature slots.
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i].reserve(xs[i]->nnz());
    for (std::size_t j = 0; j < xs[i]->nnz(); ++j) {
      auto it = std::lower_bound(active.begin(), active.end(),
                                 xs[i]->indices[j]);
      rows[i].emplace_back(
          static_cast<std::uint32_t>(it - active.begin()), xs[i]->values[j]);
    }
  }

  // Conjugate gradient on the normal equations
  //   (X'X + l2 * D) w = X' y,  D = diag(1,...,1,0) (bias unregularized),
  // with the matrix applied implicitly through two sparse passes.
  auto apply = [&](const std::vector<double>& w, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double p = w[na];
      for (const auto& [j, v] : rows[i]) p += w[j] * v;
      for (const auto& [j, v] : rows[i]) out[j] += p * v;
      out[na] += p;
    }
    for (std::size_t j = 0; j < na; ++j) out[j] += l2_penalty * w[j];
  };

  std::vector<double> rhs(nv, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, v] : rows[i]) rhs[j] += targets[i] * v;
    rhs[na] += targets[i];
  }

  std::vector<double> w(nv, 0.0), res = rhs, p = rhs, ap(nv);
  double rr = 0.0;
  for (double v : res) rr += v * v;
  const double rhs_norm = std::sqrt(rr);
  const double tol = 1e-8 * std::max(1.0, rhs_norm);
  const std::size_t max_iter = 4 * nv + 100;
  for (std::size_t it = 0; it < max_iter && std::sqrt(rr) > tol; ++it) {
    apply(p, ap);
    double pap = 0.0;
    for (std::size_t j = 0; j < nv; ++j) pap += p[j] * ap[j];
    if (pap <= 0.0) break;
    double alpha = rr / pap;
    for (std::size_t j = 0; j < nv; ++j) {
      w[j] += alpha * p[j];
      res[j] -= alpha * ap[j];
    }
    double rr_new = 0.0;
    for (double v : res) rr_new += v * v;
    double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t j = 0; j < nv; ++j) p[j] = res[j] + beta * p[j];
  }

  std::vector<std::uint32_t> out_idx;
  std::vector<double> out_val;
  for (std::size_t j = 0; j < na; ++j) {
    if (w[j] != 0.0) {
      out_idx.push_back(active[j]);
      out_val.push_back(w[j]);
    }
  }
  return AugmentedWeights{SparseVector(dim, std::move(out_idx), std::move(out_val)),
                          w[na]};
}

RegressorBank fit(const BanditLog& log, const std::vector<std::int64_t>& arm_ids,
                  std::uint32_t dim, double l2_penalty,
                  double default_prediction) {
  RegressorBank bank(dim, l2_penalty, default_prediction);
  std::unordered_map<std::int64_t, std::pair<std::vector<const SparseVector*>,
                                             std::vector<double>>> by_arm;
  for (const auto& rec : log.records()) {
    auto& slot = by_arm[rec.effective_arm];
    slot.first.push_back(&log.context(rec.context_id));
    slot.second.push_back(rec.reward);
  }
  for (auto id : arm_ids) {
    auto it = by_arm.find(id);
    if (it == by_arm.end()) continue;
    bank.set_weights(id, fit_ridge(it->second.first, it->second.second, dim,
                                   l2_penalty));
  }
  return bank;
}

}  // namespace xcb
