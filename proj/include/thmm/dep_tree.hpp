#ifndef THMM_DEP_TREE_HPP
#define THMM_DEP_TREE_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace thmm {

using WordId = std::uint32_t;
using FuncId = std::uint32_t;

/// One token of an encoded sentence. `parent` is a 1-based node index, 0
/// meaning the synthetic root.
struct TreeNode {
  WordId word = 0;
  FuncId func = 0;
  std::uint32_t parent = 0;

  bool operator==(const TreeNode&) const = default;
};

/// Sentence as a rooted single-parent tree over nodes 1..K. Construction
/// validates the structure and precomputes a root-first traversal order and
/// per-node child lists (children in ascending node order).
class DepTree {
 public:
  DepTree() = default;

  /// Throws StructuralError when parents do not form one tree hanging from
  /// node 0 (out-of-range parent, self loop, cycle).
  DepTree(std::vector<TreeNode> nodes, std::size_t sentence_id = 0);

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  std::size_t sentence_id() const { return sentence_id_; }

  /// Node k (1-based).
  const TreeNode& node(std::size_t k) const { return nodes_[k - 1]; }
  std::span<const TreeNode> nodes() const { return nodes_; }

  /// Nodes ordered so that every parent precedes its children.
  std::span<const std::uint32_t> topological_order() const { return order_; }

  /// Children of node k (k = 0 gives the root-attached nodes).
  std::span<const std::uint32_t> children(std::size_t k) const {
    return std::span<const std::uint32_t>(child_index_)
        .subspan(child_offset_[k], child_offset_[k + 1] - child_offset_[k]);
  }

  bool operator==(const DepTree& other) const {
    return sentence_id_ == other.sentence_id_ && nodes_ == other.nodes_;
  }

 private:
  std::vector<TreeNode> nodes_;
  std::size_t sentence_id_ = 0;
  std::vector<std::uint32_t> order_;
  std::vector<std::uint32_t> child_offset_;
  std::vector<std::uint32_t> child_index_;
};

}  // namespace thmm

#endif  // THMM_DEP_TREE_HPP
