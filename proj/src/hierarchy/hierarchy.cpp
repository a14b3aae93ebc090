#include "hierarchy/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>

#include "core/binio.hpp"
#include "core/error.hpp"

namespace xcb {

std::size_t LabelTree::leaf_count() const {
  std::size_t n = 0;
  for (const auto& node : nodes)
    if (node.leaf()) ++n;
  return n;
}

std::int64_t LabelTree::effective_arm_bound(std::int32_t beam) const {
  return static_cast<std::int64_t>(branching - 1) * beam * (height - 1) +
         static_cast<std::int64_t>(beam) * max_leaf;
}

void LabelTree::validate() const {
  if (num_arms < 1 || nodes.empty()) throw_numeric("LabelTree: empty");
  std::vector<char> seen(num_arms, 0);
  std::int32_t max_leaf_depth = 0;
  for (const auto& node : nodes) {
    if (node.leaf()) {
      if (static_cast<std::int32_t>(node.arms.size()) > max_leaf)
        throw_numeric("LabelTree: leaf larger than max_leaf");
      if (node.arms.empty()) throw_numeric("LabelTree: empty leaf");
      for (auto a : node.arms) {
        if (a < 0 || a >= num_arms || seen[a])
          throw_numeric("LabelTree: arm missing or duplicated");
        seen[a] = 1;
      }
      max_leaf_depth = std::max(max_leaf_depth, node.depth);
    } else {
      if (static_cast<std::int32_t>(node.children.size()) > branching)
        throw_numeric("LabelTree: branching violated");
      for (auto c : node.children) {
        if (c <= node.id || nodes[c].parent != node.id ||
            nodes[c].depth != node.depth + 1)
          throw_numeric("LabelTree: broken child links");
      }
    }
  }
  for (char s : seen)
    if (!s) throw_numeric("LabelTree: arm not covered");
  if (height != max_leaf_depth + 1) throw_numeric("LabelTree: bad height");
  // Approximate balance: height within 1 of the p-ary estimate.
  double est = std::ceil(std::log2(std::ceil(
                   static_cast<double>(num_arms) / max_leaf))) + 1.0;
  if (std::abs(height - est) > 1.0)
    throw_numeric("LabelTree: unbalanced height");
}

PifaResult pifa_embeddings(const std::vector<const SparseVector*>& contexts,
                           const std::vector<std::vector<std::int32_t>>& labels,
                           std::int32_t num_arms, std::uint32_t dim) {
  if (contexts.size() != labels.size())
    throw_numeric("pifa: context/label count mismatch");
  std::vector<std::vector<std::pair<std::uint32_t, double>>> sums(num_arms);
  std::vector<std::int64_t> counts(num_arms, 0);
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const auto& x = *contexts[i];
    if (x.dim != dim) throw_numeric("pifa: dimension mismatch");
    for (auto a : labels[i]) {
      if (a < 0 || a >= num_arms) throw_numeric("pifa: label out of range");
      for (std::size_t j = 0; j < x.nnz(); ++j)
        sums[a].emplace_back(x.indices[j], x.values[j]);
      ++counts[a];
    }
  }
  PifaResult out;
  out.embeddings.resize(num_arms);
  out.missing.assign(num_arms, 0);
  for (std::int32_t a = 0; a < num_arms; ++a) {
    if (counts[a] == 0) {
      out.missing[a] = 1;
      continue;
    }
    auto mean = SparseVector::from_pairs(dim, std::move(sums[a]));
    for (double& v : mean.values) v /= static_cast<double>(counts[a]);
    if (mean.norm2() == 0.0) {
      out.missing[a] = 1;  // positives cancelled out
      continue;
    }
    out.embeddings[a] = l2_normalize(mean);
  }
  return out;
}

namespace {

// Scratch state for one balanced spherical 2-means split.
struct Splitter {
  const PifaResult& emb;
  std::vector<double> center[2];  // dense, reused across nodes
  std::uint32_t dim;

  explicit Splitter(const PifaResult& e, std::uint32_t d) : emb(e), dim(d) {
    center[0].assign(dim, 0.0);
    center[1].assign(dim, 0.0);
  }

  void set_center(int c, const SparseVector& v) {
    std::fill(center[c].begin(), center[c].end(), 0.0);
    for (std::size_t j = 0; j < v.nnz(); ++j)
      center[c][v.indices[j]] = v.values[j];
  }

  double cos(int c, std::int32_t arm) const {
    return dot(emb.embeddings[arm], std::span<const double>(center[c]));
  }

  // Splits `ids` into two halves differing in size by at most one.
  void split(const std::vector<std::int32_t>& ids, Rng& rng,
             std::vector<std::int32_t>& left,
             std::vector<std::int32_t>& right) {
    left.clear();
    right.clear();
    std::vector<std::int32_t> real, missing;
    for (auto a : ids)
      (emb.missing[a] ? missing : real).push_back(a);

    if (real.size() < 2) {
      // Nothing to cluster; halve in id order.
      std::vector<std::int32_t> sorted = ids;
      std::sort(sorted.begin(), sorted.end());
      std::size_t half = (sorted.size() + 1) / 2;
      left.assign(sorted.begin(), sorted.begin() + half);
      right.assign(sorted.begin() + half, sorted.end());
      return;
    }

    // Farthest-point seeding: c0 farthest from the mean, c1 farthest
    // from c0 (cosine distance; lowest arm id on ties).
    std::fill(center[0].begin(), center[0].end(), 0.0);
    for (auto a : real)
      for (std::size_t j = 0; j < emb.embeddings[a].nnz(); ++j)
        center[0][emb.embeddings[a].indices[j]] += emb.embeddings[a].values[j];
    std::int32_t c0 = real[0];
    double worst = cos(0, c0);
    for (auto a : real) {
      double s = cos(0, a);
      if (s < worst || (s == worst && a < c0)) {
        worst = s;
        c0 = a;
      }
    }
    set_center(0, emb.embeddings[c0]);
    std::int32_t c1 = (real[0] == c0 && real.size() > 1) ? real[1] : real[0];
    worst = cos(0, c1);
    for (auto a : real) {
      if (a == c0) continue;
      double s = cos(0, a);
      if (s < worst || (s == worst && a < c1)) {
        worst = s;
        c1 = a;
      }
    }
    set_center(1, emb.embeddings[c1]);

    // Parabel-style balanced assignment: order by cosine margin and cut
    // at the midpoint, then recompute centers.
    std::vector<std::pair<double, std::int32_t>> margin(real.size());
    std::vector<std::int32_t> l_real, r_real, prev_l;
    double prev_obj = -1e18;
    for (int iter = 0; iter < 40; ++iter) {
      for (std::size_t i = 0; i < real.size(); ++i)
        margin[i] = {cos(0, real[i]) - cos(1, real[i]), real[i]};
      std::sort(margin.begin(), margin.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
      });
      l_real.clear();
      r_real.clear();
      double obj = 0.0;
      std::size_t half = (real.size() + 1) / 2;
      for (std::size_t i = 0; i < margin.size(); ++i) {
        auto a = margin[i].second;
        if (i < half) {
          l_real.push_back(a);
          obj += cos(0, a);
        } else {
          r_real.push_back(a);
          obj += cos(1, a);
        }
      }
      if (l_real == prev_l || obj - prev_obj < 1e-9) break;
      prev_l = l_real;
      prev_obj = obj;
      for (int c = 0; c < 2; ++c) {
        const auto& members = c == 0 ? l_real : r_real;
        std::fill(center[c].begin(), center[c].end(), 0.0);
        double norm = 0.0;
        for (auto a : members)
          for (std::size_t j = 0; j < emb.embeddings[a].nnz(); ++j)
            center[c][emb.embeddings[a].indices[j]] +=
                emb.embeddings[a].values[j];
        for (double v : center[c]) norm += v * v;
        norm = std::sqrt(norm);
        if (norm > 0)
          for (double& v : center[c]) v /= norm;
      }
    }

    left = std::move(l_real);
    right = std::move(r_real);
    std::sort(left.begin(), left.end());
    std::sort(right.begin(), right.end());
    // Missing-embedding arms keep the split balanced: smaller side wins,
    // seeded coin flip on ties.
    std::sort(missing.begin(), missing.end());
    for (auto a : missing) {
      if (left.size() < right.size())
        left.push_back(a);
      else if (right.size() < left.size())
        right.push_back(a);
      else
        (rng.below(2) == 0 ? left : right).push_back(a);
    }
    std::sort(left.begin(), left.end());
    std::sort(right.begin(), right.end());
  }
};

void finalize_tree(LabelTree& tree) {
  // Flat arm order and subtree spans via DFS; children visited in id order.
  tree.flat_arms.clear();
  tree.flat_arms.reserve(tree.num_arms);
  std::vector<std::pair<std::int32_t, bool>> stack{{0, false}};
  // Two passes: collect leaf arms in DFS order, then fill spans bottom-up.
  std::vector<std::int32_t> dfs;
  dfs.reserve(tree.nodes.size());
  while (!stack.empty()) {
    auto [id, seen] = stack.back();
    stack.pop_back();
    dfs.push_back(id);
    auto& node = tree.nodes[id];
    if (node.leaf()) {
      node.span_begin = static_cast<std::int32_t>(tree.flat_arms.size());
      node.span_count = static_cast<std::int32_t>(node.arms.size());
      tree.flat_arms.insert(tree.flat_arms.end(), node.arms.begin(),
                            node.arms.end());
    } else {
      for (auto it = node.children.rbegin(); it != node.children.rend(); ++it)
        stack.push_back({*it, false});
    }
  }
  for (auto it = dfs.rbegin(); it != dfs.rend(); ++it) {
    auto& node = tree.nodes[*it];
    if (!node.leaf()) {
      node.span_begin = tree.nodes[node.children.front()].span_begin;
      node.span_count = 0;
      for (auto c : node.children) node.span_count += tree.nodes[c].span_count;
    }
  }
  std::int32_t deepest = 0;
  for (const auto& node : tree.nodes)
    if (node.leaf()) deepest = std::max(deepest, node.depth);
  tree.height = deepest + 1;
}

}  // namespace

LabelTree build_tree(const PifaResult& embeddings, std::int32_t num_arms,
                     std::int32_t max_leaf, Rng& rng) {
  if (num_arms < 1) throw_usage("build_tree: need at least one arm");
  if (max_leaf < 1) throw_usage("build_tree: max_leaf must be >= 1");
  if (static_cast<std::int32_t>(embeddings.embeddings.size()) != num_arms)
    throw_numeric("build_tree: embedding count != num_arms");

  std::uint32_t dim = 0;
  for (const auto& e : embeddings.embeddings) dim = std::max(dim, e.dim);
  Splitter splitter(embeddings, dim);

  LabelTree tree;
  tree.num_arms = num_arms;
  tree.max_leaf = max_leaf;

  std::vector<std::int32_t> all(num_arms);
  std::iota(all.begin(), all.end(), 0);
  // BFS construction keeps node ids sorted by (depth, id).
  std::deque<std::pair<std::int32_t, std::vector<std::int32_t>>> queue;
  tree.nodes.push_back({0, -1, 0, {}, {}, 0, 0});
  queue.emplace_back(0, std::move(all));
  std::vector<std::int32_t> left, right;
  while (!queue.empty()) {
    auto [id, arms] = std::move(queue.front());
    queue.pop_front();
    if (static_cast<std::int32_t>(arms.size()) <= max_leaf) {
      std::sort(arms.begin(), arms.end());
      tree.nodes[id].arms = std::move(arms);
      continue;
    }
    splitter.split(arms, rng, left, right);
    for (auto* part : {&left, &right}) {
      auto cid = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.push_back({cid, id, tree.nodes[id].depth + 1, {}, {}, 0, 0});
      tree.nodes[id].children.push_back(cid);
      queue.emplace_back(cid, std::move(*part));
    }
  }
  finalize_tree(tree);
  tree.build_seed = rng.seed();
  return tree;
}

LabelTree build_range_tree(std::int32_t num_arms, std::int32_t max_leaf) {
  if (num_arms < 1 || max_leaf < 1) throw_usage("build_range_tree: bad sizes");
  LabelTree tree;
  tree.num_arms = num_arms;
  tree.max_leaf = max_leaf;
  std::deque<std::tuple<std::int32_t, std::int32_t, std::int32_t>> queue;
  tree.nodes.push_back({0, -1, 0, {}, {}, 0, 0});
  queue.emplace_back(0, 0, num_arms);
  while (!queue.empty()) {
    auto [id, begin, count] = queue.front();
    queue.pop_front();
    if (count <= max_leaf) {
      auto& node = tree.nodes[id];
      node.arms.resize(count);
      std::iota(node.arms.begin(), node.arms.end(), begin);
      continue;
    }
    std::int32_t half = (count + 1) / 2;
    std::int32_t child_spec[2][2] = {{begin, half}, {begin + half, count - half}};
    for (auto& [cb, cc] : child_spec) {
      auto cid = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.push_back({cid, id, tree.nodes[id].depth + 1, {}, {}, 0, 0});
      tree.nodes[id].children.push_back(cid);
      queue.emplace_back(cid, cb, cc);
    }
  }
  finalize_tree(tree);
  return tree;
}

double RoutingBank::score(const SparseVector& x, std::int32_t node_id) const {
  if (node_id < 0 || node_id >= static_cast<std::int32_t>(models_.size()))
    throw_numeric("routing: unknown node");
  return std::clamp(models_[node_id].raw(x), 0.0, 1.0);
}

void RoutingBank::set(std::int32_t node_id, AugmentedWeights w) {
  if (node_id >= static_cast<std::int32_t>(models_.size()))
    models_.resize(node_id + 1,
                   AugmentedWeights{SparseVector(dim_, {}, {}), 0.0});
  models_[node_id] = std::move(w);
}

const AugmentedWeights& RoutingBank::weights(std::int32_t node_id) const {
  return models_.at(node_id);
}

bool RoutingBank::operator==(const RoutingBank& o) const {
  return dim_ == o.dim_ && models_ == o.models_;
}

RoutingBank train_routing(const LabelTree& tree,
                          const std::vector<const SparseVector*>& contexts,
                          const std::vector<std::vector<std::int32_t>>& labels,
                          std::uint32_t dim, double l2_penalty) {
  if (contexts.size() != labels.size())
    throw_numeric("train_routing: context/label count mismatch");
  const auto n_nodes = static_cast<std::int32_t>(tree.nodes.size());

  std::vector<std::int32_t> leaf_of(tree.num_arms, -1);
  for (const auto& node : tree.nodes)
    for (auto a : node.arms) leaf_of[a] = node.id;

  // Instances whose positive labels touch each node's subtree.
  std::vector<std::vector<std::int32_t>> members(n_nodes);
  std::vector<std::int32_t> marks;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    marks.clear();
    for (auto a : labels[i]) {
      if (a < 0 || a >= tree.num_arms)
        throw_numeric("train_routing: label out of range");
      for (auto id = leaf_of[a]; id != -1; id = tree.nodes[id].parent)
        marks.push_back(id);
    }
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
    for (auto id : marks) members[id].push_back(static_cast<std::int32_t>(i));
  }

  RoutingBank bank(dim);
  // Presize so every node id scores as the constant-0 fallback.
  bank.set(n_nodes - 1, AugmentedWeights{SparseVector(dim, {}, {}), 0.0});
  std::vector<const SparseVector*> xs;
  std::vector<double> ys;
  std::vector<std::int32_t> negatives;
  for (std::int32_t id = 1; id < n_nodes; ++id) {
    const auto& pos = members[id];
    const auto& parent_members = members[tree.nodes[id].parent];
    negatives.clear();
    std::set_difference(parent_members.begin(), parent_members.end(),
                        pos.begin(), pos.end(), std::back_inserter(negatives));
    if (pos.empty()) continue;  // stays a constant-0 scorer
    xs.clear();
    ys.clear();
    for (auto i : pos) {
      xs.push_back(contexts[i]);
      ys.push_back(1.0);
    }
    for (auto i : negatives) {
      xs.push_back(contexts[i]);
      ys.push_back(0.0);
    }
    bank.set(id, fit_ridge(xs, ys, dim, l2_penalty));
  }
  return bank;
}

EffectiveArmSet beam_search(const LabelTree& tree, const RoutingBank& routing,
                            const SparseVector& x, std::int32_t beam,
                            std::size_t* score_evals) {
  if (beam < 1) throw_usage("beam_search: beam must be >= 1");
  std::vector<std::int32_t> kept{0};
  std::vector<std::int32_t> pruned;
  std::vector<std::int32_t> candidates;
  std::vector<std::pair<double, std::int32_t>> scored;
  auto all_leaves = [&](const std::vector<std::int32_t>& ids) {
    for (auto id : ids)
      if (!tree.nodes[id].leaf()) return false;
    return true;
  };
  while (!all_leaves(kept)) {
    candidates.clear();
    for (auto id : kept) {
      const auto& node = tree.nodes[id];
      if (node.leaf())
        candidates.push_back(id);
      else
        candidates.insert(candidates.end(), node.children.begin(),
                          node.children.end());
    }
    if (static_cast<std::int32_t>(candidates.size()) <= beam) {
      kept = candidates;
      continue;
    }
    scored.clear();
    for (auto id : candidates) {
      scored.emplace_back(routing.score(x, id), id);
      if (score_evals) ++*score_evals;
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    kept.clear();
    for (std::int32_t i = 0; i < beam; ++i) kept.push_back(scored[i].second);
    for (std::size_t i = beam; i < scored.size(); ++i)
      pruned.push_back(scored[i].second);
  }

  std::sort(pruned.begin(), pruned.end(), [&](std::int32_t a, std::int32_t b) {
    if (tree.nodes[a].depth != tree.nodes[b].depth)
      return tree.nodes[a].depth < tree.nodes[b].depth;
    return a < b;
  });
  std::vector<std::int32_t> singles;
  for (auto id : kept)
    singles.insert(singles.end(), tree.nodes[id].arms.begin(),
                   tree.nodes[id].arms.end());
  std::sort(singles.begin(), singles.end());

  EffectiveArmSet out;
  out.entries.reserve(pruned.size() + singles.size());
  for (auto id : pruned)
    out.entries.push_back({EffectiveArm::Kind::node, id, tree.node_key(id),
                           tree.nodes[id].depth});
  for (auto a : singles)
    out.entries.push_back({EffectiveArm::Kind::singleton, a, a, -1});
  return out;
}

std::int32_t resolve_singleton(const LabelTree& tree, std::int32_t node_id,
                               Rng& rng) {
  if (node_id < 0 || node_id >= static_cast<std::int32_t>(tree.nodes.size()))
    throw_numeric("resolve_singleton: unknown node");
  const auto& node = tree.nodes[node_id];
  auto offset = rng.below(static_cast<std::uint64_t>(node.span_count));
  return tree.flat_arms[node.span_begin + static_cast<std::int32_t>(offset)];
}

namespace {
constexpr char kModelMagic[4] = {'X', 'C', 'B', 'T'};
constexpr std::uint32_t kModelVersion = 1;
}  // namespace

void save_model(std::ostream& os, const LabelTree& tree,
                const RoutingBank& routing) {
  write_magic(os, kModelMagic, kModelVersion);
  write_pod<std::int32_t>(os, tree.num_arms);
  write_pod<std::int32_t>(os, tree.branching);
  write_pod<std::int32_t>(os, tree.max_leaf);
  write_pod<std::int32_t>(os, tree.height);
  write_pod<std::uint64_t>(os, tree.build_seed);
  write_pod<std::int64_t>(os, tree.init_size);
  write_pod<std::uint64_t>(os, tree.nodes.size());
  for (const auto& node : tree.nodes) {
    write_pod<std::int32_t>(os, node.parent);
    write_pod<std::int32_t>(os, node.depth);
    write_vec(os, node.children);
    write_vec(os, node.arms);
  }
  write_pod<std::uint32_t>(os, routing.dim_);
  write_pod<std::uint64_t>(os, routing.models_.size());
  for (const auto& w : routing.models_) {
    write_vec(os, w.weights.indices);
    write_vec(os, w.weights.values);
    write_pod<double>(os, w.bias);
  }
}

void load_model(std::istream& is, LabelTree& tree, RoutingBank& routing) {
  auto version = read_magic(is, kModelMagic);
  if (version != kModelVersion) throw_io("unsupported model version");
  tree = LabelTree{};
  tree.num_arms = read_pod<std::int32_t>(is);
  tree.branching = read_pod<std::int32_t>(is);
  tree.max_leaf = read_pod<std::int32_t>(is);
  tree.height = read_pod<std::int32_t>(is);
  tree.build_seed = read_pod<std::uint64_t>(is);
  tree.init_size = read_pod<std::int64_t>(is);
  auto count = read_pod<std::uint64_t>(is);
  tree.nodes.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    auto& node = tree.nodes[i];
    node.id = static_cast<std::int32_t>(i);
    node.parent = read_pod<std::int32_t>(is);
    node.depth = read_pod<std::int32_t>(is);
    node.children = read_vec<std::int32_t>(is);
    node.arms = read_vec<std::int32_t>(is);
  }
  finalize_tree(tree);
  routing = RoutingBank{};
  routing.dim_ = read_pod<std::uint32_t>(is);
  auto n_models = read_pod<std::uint64_t>(is);
  routing.models_.resize(n_models);
  for (std::uint64_t i = 0; i < n_models; ++i) {
    auto idx = read_vec<std::uint32_t>(is);
    auto val = read_vec<double>(is);
    routing.models_[i].weights =
        SparseVector(routing.dim_, std::move(idx), std::move(val));
    routing.models_[i].bias = read_pod<double>(is);
  }
}

void save_model_file(const std::string& path, const LabelTree& tree,
                     const RoutingBank& routing) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw_io("cannot open for writing: " + path);
  save_model(os, tree, routing);
  if (!os) throw_io("write failed: " + path);
}

void load_model_file(const std::string& path, LabelTree& tree,
                     RoutingBank& routing) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw_io("cannot open: " + path);
  load_model(is, tree, routing);
}

}  // namespace xcb
