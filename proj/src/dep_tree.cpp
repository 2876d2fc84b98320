#include "thmm/dep_tree.hpp"

#include <string>

#include "thmm/errors.hpp"

namespace thmm {

DepTree::DepTree(std::vector<TreeNode> nodes, std::size_t sentence_id)
    : nodes_(std::move(nodes)), sentence_id_(sentence_id) {
  const std::size_t k_max = nodes_.size();
  child_offset_.assign(k_max + 2, 0);
  for (std::size_t k = 1; k <= k_max; ++k) {
    const auto parent = nodes_[k - 1].parent;
    if (parent > k_max)
      throw StructuralError(sentence_id_, "node " + std::to_string(k) +
                                              " has out-of-range parent " +
                                              std::to_string(parent));
    if (parent == k)
      throw StructuralError(sentence_id_,
                            "node " + std::to_string(k) + " is its own parent");
    ++child_offset_[parent + 1];
  }
  for (std::size_t k = 1; k < child_offset_.size(); ++k)
    child_offset_[k] += child_offset_[k - 1];

  child_index_.resize(k_max);
  std::vector<std::uint32_t> fill(child_offset_.begin(), child_offset_.end() - 1);
  for (std::uint32_t k = 1; k <= k_max; ++k)
    child_index_[fill[nodes_[k - 1].parent]++] = k;

  // Breadth-first from the root; anything unreached sits on a cycle.
  order_.reserve(k_max);
  for (auto c : children(0)) order_.push_back(c);
  for (std::size_t head = 0; head < order_.size(); ++head)
    for (auto c : children(order_[head])) order_.push_back(c);
  if (order_.size() != k_max)
    throw StructuralError(sentence_id_, "head structure contains a cycle");
}

}  // namespace thmm
