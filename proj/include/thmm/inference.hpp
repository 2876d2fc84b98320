#ifndef THMM_INFERENCE_HPP
#define THMM_INFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "thmm/dep_tree.hpp"
#include "thmm/errors.hpp"
#include "thmm/model.hpp"

namespace thmm {

/// k-best belief projection: only the keep_k largest coefficients of each
/// upward belief survive. keep_k >= N is the identity.
struct ProjectionConfig {
  bool enabled = false;
  std::size_t keep_k = 1;

  static ProjectionConfig off() { return {}; }
  static ProjectionConfig keep(std::size_t k) { return {true, k}; }
  bool active(std::size_t states) const { return enabled && keep_k < states; }
};

/// Messages and posteriors for one tree; index k - 1 holds node k.
template <typename Scalar>
struct BeliefTable {
  // Normalized upward belief: emission times child messages (projected).
  std::vector<Vector<Scalar>> belief;
  // Message to the parent over parent states; a single entry (the combined
  // mass) for root-attached nodes.
  std::vector<Vector<Scalar>> up;
  // Normalized outside evidence over the node's own states.
  std::vector<Vector<Scalar>> down;
  std::vector<Vector<Scalar>> node_posterior;
  // N x N (child, parent); N x 1 for root-attached nodes.
  std::vector<Matrix<Scalar>> edge_posterior;
  std::vector<Scalar> log_scale;
  Scalar log_likelihood = 0;
};

namespace detail {

template <typename Scalar>
void check_dimensions(const DepTree& tree, const ModelParams<Scalar>& params) {
  const auto& meta = params.meta;
  if (params.transition.size() != meta.functions || params.emission.size() != meta.functions)
    throw ConfigError("model tensors disagree with meta");
  for (const auto& node : tree.nodes()) {
    if (node.word >= meta.vocab)
      throw ConfigError("word id " + std::to_string(node.word) + " outside vocabulary of " +
                        std::to_string(meta.vocab) + " (sentence " +
                        std::to_string(tree.sentence_id()) + ")");
    if (node.func >= meta.functions)
      throw ConfigError("function id " + std::to_string(node.func) + " outside " +
                        std::to_string(meta.functions) + " functions (sentence " +
                        std::to_string(tree.sentence_id()) + ")");
  }
}

/// Zeros all but the keep_k largest entries (ties to the lower index) and
/// returns the mass that survived.
template <typename Scalar>
Scalar project_k_best(Vector<Scalar>& b, std::size_t keep_k) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(b.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  const auto mid = idx.begin() + static_cast<std::ptrdiff_t>(keep_k);
  std::nth_element(idx.begin(), mid, idx.end(), [&](Eigen::Index a, Eigen::Index c) {
    return b(a) > b(c) || (b(a) == b(c) && a < c);
  });
  for (auto it = mid; it != idx.end(); ++it) b(*it) = 0;
  return b.sum();
}

[[noreturn]] inline void zero_belief(const DepTree& tree, std::size_t k, const char* where) {
  throw NumericalError(std::string(where) + " has no mass at node " + std::to_string(k) +
                       " of sentence " + std::to_string(tree.sentence_id()));
}

}  // namespace detail

/// Leaves-to-root pass. Beliefs are renormalized at every node and the log
/// normalizers accumulated, so the likelihood never underflows.
template <typename Scalar>
BeliefTable<Scalar> upward_pass(const DepTree& tree, const ModelParams<Scalar>& params,
                                const ProjectionConfig& proj = {}) {
  detail::check_dimensions(tree, params);
  const std::size_t n = params.states();
  if (proj.enabled && proj.keep_k < 1)
    throw ConfigError("projection keep-k must be at least 1");
  const bool project = proj.active(n);

  BeliefTable<Scalar> bt;
  const std::size_t k_max = tree.size();
  bt.belief.resize(k_max);
  bt.up.resize(k_max);
  bt.log_scale.assign(k_max, Scalar(0));

  const auto order = tree.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t k = *it;
    const auto& node = tree.node(k);
    Vector<Scalar> b = params.emission[node.func].row(node.word).transpose();
    for (auto c : tree.children(k)) b.array() *= bt.up[c - 1].array();

    Scalar z = b.sum();
    if (!(z > 0) || !std::isfinite(static_cast<double>(z))) detail::zero_belief(tree, k, "belief");
    b /= z;
    Scalar log_z = std::log(z);
    if (project) {
      const Scalar kept = detail::project_k_best(b, proj.keep_k);
      if (!(kept > 0)) detail::zero_belief(tree, k, "projected belief");
      b /= kept;
      log_z += std::log(kept);
    }
    bt.log_scale[k - 1] = log_z;

    if (node.parent == 0) {
      const Scalar mass = params.root.col(node.func).dot(b);
      if (!(mass > 0)) detail::zero_belief(tree, k, "root message");
      bt.up[k - 1] = Vector<Scalar>::Constant(1, mass);
    } else {
      bt.up[k - 1] = params.transition[node.func].transpose() * b;
    }
    bt.belief[k - 1] = std::move(b);
  }

  Scalar ll = 0;
  for (std::size_t k = 1; k <= k_max; ++k) {
    ll += bt.log_scale[k - 1];
    if (tree.node(k).parent == 0) ll += std::log(bt.up[k - 1](0));
  }
  bt.log_likelihood = ll;
  return bt;
}

/// Root-to-leaves pass completing node and edge posteriors. Outside evidence
/// for a child excludes its own message through prefix/suffix products over
/// its siblings, so no division by (possibly zero) messages is needed.
template <typename Scalar>
BeliefTable<Scalar> downward_pass(BeliefTable<Scalar> bt, const DepTree& tree,
                                  const ModelParams<Scalar>& params) {
  const std::size_t k_max = tree.size();
  const auto n = static_cast<Eigen::Index>(params.states());
  if (bt.belief.size() != k_max) throw ConfigError("belief table does not match tree");
  bt.down.resize(k_max);
  bt.node_posterior.resize(k_max);
  bt.edge_posterior.resize(k_max);

  auto finish_node = [&](std::size_t k) {
    Vector<Scalar> q = bt.belief[k - 1].cwiseProduct(bt.down[k - 1]);
    const Scalar z = q.sum();
    if (!(z > 0)) detail::zero_belief(tree, k, "posterior");
    bt.node_posterior[k - 1] = q / z;
  };

  for (auto c : tree.children(0)) {
    const auto& node = tree.node(c);
    Vector<Scalar> d = params.root.col(node.func);
    const Scalar z = d.sum();
    if (!(z > 0)) detail::zero_belief(tree, c, "root column");
    bt.down[c - 1] = d / z;
    finish_node(c);
    bt.edge_posterior[c - 1] = bt.node_posterior[c - 1];
  }

  std::vector<Vector<Scalar>> suffix;
  for (const auto p : tree.topological_order()) {
    const auto kids = tree.children(p);
    if (kids.empty()) continue;
    const auto& pnode = tree.node(p);
    Vector<Scalar> prefix =
        bt.down[p - 1].cwiseProduct(params.emission[pnode.func].row(pnode.word).transpose());

    suffix.assign(kids.size() + 1, Vector<Scalar>::Ones(n));
    for (std::size_t i = kids.size(); i-- > 0;)
      suffix[i] = suffix[i + 1].cwiseProduct(bt.up[kids[i] - 1]);

    for (std::size_t i = 0; i < kids.size(); ++i) {
      const std::size_t c = kids[i];
      const auto& t = params.transition[tree.node(c).func];
      const Vector<Scalar> outside = prefix.cwiseProduct(suffix[i + 1]);

      Vector<Scalar> d = t * outside;
      const Scalar dz = d.sum();
      if (!(dz > 0)) detail::zero_belief(tree, c, "outside message");
      bt.down[c - 1] = d / dz;
      finish_node(c);

      Matrix<Scalar> e = bt.belief[c - 1].asDiagonal() * t * outside.asDiagonal();
      const Scalar ez = e.sum();
      if (!(ez > 0)) detail::zero_belief(tree, c, "edge posterior");
      bt.edge_posterior[c - 1] = e / ez;

      prefix = prefix.cwiseProduct(bt.up[c - 1]);
    }
  }
  return bt;
}

/// Full sum-product: posteriors, edge posteriors and log-likelihood. If the
/// k-best projection prunes every state consistent with some node, the tree
/// is redone exactly; only a zero-mass tree under exact inference throws.
template <typename Scalar>
BeliefTable<Scalar> infer(const DepTree& tree, const ModelParams<Scalar>& params,
                          const ProjectionConfig& proj = {}) {
  if (proj.active(params.states())) {
    try {
      return downward_pass(upward_pass(tree, params, proj), tree, params);
    } catch (const NumericalError&) {
    }
  }
  return downward_pass(upward_pass(tree, params, ProjectionConfig::off()), tree, params);
}

/// log p(words | functions), marginalized over states (exact).
template <typename Scalar>
Scalar tree_log_likelihood(const DepTree& tree, const ModelParams<Scalar>& params) {
  return upward_pass(tree, params).log_likelihood;
}

/// Most probable joint state assignment (index k - 1 for node k), computed
/// in log space with backpointers. Ties go to the lower state index.
template <typename Scalar>
std::vector<std::size_t> max_product_decode(const DepTree& tree,
                                            const ModelParams<Scalar>& params) {
  detail::check_dimensions(tree, params);
  const auto n = static_cast<Eigen::Index>(params.states());
  const std::size_t k_max = tree.size();
  std::vector<Vector<Scalar>> score(k_max);               // best subtree log score per state
  std::vector<Vector<Scalar>> msg(k_max);                 // max message per parent state
  std::vector<std::vector<std::size_t>> back(k_max);      // child state per parent state
  std::vector<std::size_t> best(k_max, 0);

  const auto order = tree.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t k = *it;
    const auto& node = tree.node(k);
    Vector<Scalar> s = params.emission[node.func].row(node.word).transpose().array().log();
    for (auto c : tree.children(k)) s += msg[c - 1];
    score[k - 1] = std::move(s);
    if (node.parent == 0) continue;

    const auto& t = params.transition[node.func];
    Vector<Scalar> m(n);
    std::vector<std::size_t> bp(static_cast<std::size_t>(n), 0);
    for (Eigen::Index j = 0; j < n; ++j) {
      Scalar top = -std::numeric_limits<Scalar>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar v = std::log(t(i, j)) + score[k - 1](i);
        if (v > top) {
          top = v;
          bp[j] = static_cast<std::size_t>(i);
        }
      }
      m(j) = top;
    }
    msg[k - 1] = std::move(m);
    back[k - 1] = std::move(bp);
  }

  for (const auto k : order) {
    const auto& node = tree.node(k);
    if (node.parent == 0) {
      Scalar top = -std::numeric_limits<Scalar>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar v = std::log(params.root(i, node.func)) + score[k - 1](i);
        if (v > top) {
          top = v;
          best[k - 1] = static_cast<std::size_t>(i);
        }
      }
    } else {
      best[k - 1] = back[k - 1][best[node.parent - 1]];
    }
  }
  return best;
}

}  // namespace thmm

#endif  // THMM_INFERENCE_HPP
