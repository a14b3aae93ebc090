#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/sparse.hpp"
#include "oracle/oracle.hpp"

namespace xcb {

// Balanced binary hierarchy over arms. Nodes are id-ordered breadth first
// (so sorting by node id is sorting by (depth, id)); leaves hold at most
// max_leaf arms. Height counts the arm level below the leaves:
// H = deepest leaf depth + 1, which tracks ceil(log_p(ceil(A/m))) within 1.
struct LabelTree {
  struct Node {
    std::int32_t id = 0;
    std::int32_t parent = -1;
    std::int32_t depth = 0;
    std::vector<std::int32_t> children;      // empty for leaves
    std::vector<std::int32_t> arms;          // leaf level only, sorted
    std::int32_t span_begin = 0;             // range in flat_arms covered
    std::int32_t span_count = 0;             //   by this node's subtree
    bool leaf() const { return children.empty(); }
  };

  std::int32_t num_arms = 0;
  std::int32_t branching = 2;
  std::int32_t max_leaf = 0;
  std::int32_t height = 0;
  std::vector<Node> nodes;                   // nodes[0] is the root
  std::vector<std::int32_t> flat_arms;       // arms in leaf DFS order
  std::uint64_t build_seed = 0;
  std::int64_t init_size = 0;                // rows used for tree + routing

  const Node& root() const { return nodes[0]; }
  std::size_t leaf_count() const;

  // Effective arm ids live in one key space: arm a -> a,
  // node n -> num_arms + n.id.
  std::int64_t node_key(std::int32_t node_id) const {
    return static_cast<std::int64_t>(num_arms) + node_id;
  }

  // Worst-case effective arm count (p-1) * b * (H-1) + b * m.
  std::int64_t effective_arm_bound(std::int32_t beam) const;

  void validate() const;  // structural invariants; throws on violation
};

// PIFA label embeddings: the l2-normalized mean of each arm's positive
// instances. Arms with no positives (or cancelling ones) come back with an
// empty vector and their flag set.
struct PifaResult {
  std::vector<SparseVector> embeddings;
  std::vector<char> missing;
};
PifaResult pifa_embeddings(const std::vector<const SparseVector*>& contexts,
                           const std::vector<std::vector<std::int32_t>>& labels,
                           std::int32_t num_arms, std::uint32_t dim);

// Recursive balanced spherical 2-means over the embeddings. Splits differ
// in size by at most one; recursion stops at max_leaf arms. Arms with
// missing embeddings join the smaller side of each split.
LabelTree build_tree(const PifaResult& embeddings, std::int32_t num_arms,
                     std::int32_t max_leaf, Rng& rng);

// Balanced tree over plain arm-id ranges; used for synthetic benchmarks
// where no embedding data exists.
LabelTree build_range_tree(std::int32_t num_arms, std::int32_t max_leaf);

// One linear scorer per non-root node, clamped to [0, 1] when evaluated.
class RoutingBank {
 public:
  RoutingBank() = default;
  explicit RoutingBank(std::uint32_t dim) : dim_(dim) {}

  double score(const SparseVector& x, std::int32_t node_id) const;
  void set(std::int32_t node_id, AugmentedWeights w);
  const AugmentedWeights& weights(std::int32_t node_id) const;
  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return models_.size(); }

  bool operator==(const RoutingBank& o) const;

  friend void save_model(std::ostream& os, const LabelTree& tree,
                         const RoutingBank& routing);
  friend void load_model(std::istream& is, LabelTree& tree,
                         RoutingBank& routing);

 private:
  std::uint32_t dim_ = 0;
  std::vector<AugmentedWeights> models_;  // indexed by node id; [0] unused
};

// One-vs-all routing training on a held-out split: positives are instances
// with a positive label inside the node's subtree, negatives those positive
// in the parent's subtree but not the node's. Squared loss to {1, 0}
// targets; nodes with no data keep the constant-0 scorer.
RoutingBank train_routing(const LabelTree& tree,
                          const std::vector<const SparseVector*>& contexts,
                          const std::vector<std::vector<std::int32_t>>& labels,
                          std::uint32_t dim, double l2_penalty);

// Context-dependent decomposition A_x = I_x (pruned nodes) + S_x
// (singleton arms under kept leaves), in deterministic order: I_x sorted by
// (depth, node id), then S_x sorted by arm id.
struct EffectiveArm {
  enum class Kind { node, singleton };
  Kind kind;
  std::int32_t id;        // node id or arm id
  std::int64_t key;       // id in the shared effective-arm key space
  std::int32_t depth;     // node entries only; -1 for singletons
};

struct EffectiveArmSet {
  std::vector<EffectiveArm> entries;
  std::size_t size() const { return entries.size(); }
};

// Level-synchronous beam search: expand children of kept nodes, keep the
// top-b routing scores (lowest node id on ties), and dump the rest into
// I_x. Kept leaves persist until the frontier is all-leaf.
EffectiveArmSet beam_search(const LabelTree& tree, const RoutingBank& routing,
                            const SparseVector& x, std::int32_t beam,
                            std::size_t* score_evals = nullptr);

// Uniform draw over the singleton arms in the node's subtree.
std::int32_t resolve_singleton(const LabelTree& tree, std::int32_t node_id,
                               Rng& rng);

void save_model(std::ostream& os, const LabelTree& tree,
                const RoutingBank& routing);
void load_model(std::istream& is, LabelTree& tree, RoutingBank& routing);
void save_model_file(const std::string& path, const LabelTree& tree,
                     const RoutingBank& routing);
void load_model_file(const std::string& path, LabelTree& tree,
                     RoutingBank& routing);

}  // namespace xcb
