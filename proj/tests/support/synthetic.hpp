// Synthetic models and corpora sampled from them, for tests.
#ifndef THMM_TESTS_SYNTHETIC_HPP
#define THMM_TESTS_SYNTHETIC_HPP

#include <algorithm>
#include <vector>

#include "thmm/dep_tree.hpp"
#include "thmm/model.hpp"
#include "thmm/rng.hpp"

namespace synthetic {

inline std::size_t draw(const Eigen::VectorXd& dist, std::mt19937_64& gen) {
  double u = thmm::uniform01(gen) * dist.sum();
  for (Eigen::Index i = 0; i < dist.size(); ++i) {
    u -= dist(i);
    if (u < 0) return static_cast<std::size_t>(i);
  }
  return static_cast<std::size_t>(dist.size() - 1);
}

/// Random tree over K nodes: node 1 hangs from the root, node k > 1 from a
/// uniformly chosen earlier node. Words and functions uniform.
inline thmm::DepTree random_tree(std::size_t k_max, std::size_t vocab, std::size_t functions,
                                 std::mt19937_64& gen, std::size_t sentence_id = 0) {
  std::vector<thmm::TreeNode> nodes(k_max);
  for (std::size_t k = 1; k <= k_max; ++k) {
    auto& nd = nodes[k - 1];
    nd.parent = k == 1 ? 0 : static_cast<std::uint32_t>(1 + thmm::uniform_index(gen, k - 1));
    nd.word = static_cast<thmm::WordId>(thmm::uniform_index(gen, vocab));
    nd.func = static_cast<thmm::FuncId>(thmm::uniform_index(gen, functions));
  }
  return thmm::DepTree(std::move(nodes), sentence_id);
}

/// Planted model: state j owns words [j*V/N, (j+1)*V/N) with `own_mass` of
/// its emission mass. With `function_dependent`, function l sends parent j
/// to child (j + l + 1) mod N with probability `sharp`; otherwise all
/// functions share one random transition table.
inline thmm::Model planted_model(std::size_t n, std::size_t v, std::size_t s, std::uint64_t seed,
                                 bool function_dependent = true, double own_mass = 0.8,
                                 double sharp = 0.85) {
  auto gen = thmm::rng_stream(seed, "planted");
  thmm::Model p(thmm::ModelMeta{n, v, s, seed});
  const std::size_t per = v / n;
  Eigen::MatrixXd shared(n, n);
  for (Eigen::Index i = 0; i < shared.size(); ++i) shared.data()[i] = 0.2 + thmm::uniform01(gen);
  thmm::normalize_columns(shared);
  for (std::size_t l = 0; l < s; ++l) {
    auto& o = p.emission[l];
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t w = 0; w < v; ++w) o(w, j) = 0.5 + thmm::uniform01(gen);
      Eigen::VectorXd own = o.col(j).segment(j * per, per);
      Eigen::VectorXd col = o.col(j);
      col.segment(j * per, per).setZero();
      col *= (1 - own_mass) / col.sum();
      col.segment(j * per, per) = own * (own_mass / own.sum());
      o.col(j) = col;
    }
    auto& t = p.transition[l];
    if (function_dependent) {
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
          t(i, j) = i == (j + l + 1) % n ? sharp : (1 - sharp) / static_cast<double>(n - 1);
    } else {
      t = shared;
    }
    for (std::size_t i = 0; i < n; ++i) p.root(i, l) = 0.5 + thmm::uniform01(gen);
  }
  thmm::normalize_columns(p.root);
  return p;
}

/// Samples `count` trees with lengths uniform in [min_len, max_len]; shapes
/// and functions as in random_tree, states and words from the model.
inline std::vector<thmm::DepTree> sample_corpus(const thmm::Model& p, std::size_t count,
                                                std::uint64_t seed, std::size_t min_len = 3,
                                                std::size_t max_len = 8) {
  auto gen = thmm::rng_stream(seed, "sample");
  std::vector<thmm::DepTree> trees;
  trees.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    const auto k_max = min_len + thmm::uniform_index(gen, max_len - min_len + 1);
    const auto shape = random_tree(k_max, p.vocab(), p.functions(), gen, t);
    std::vector<thmm::TreeNode> nodes(shape.nodes().begin(), shape.nodes().end());
    std::vector<std::size_t> state(k_max);
    for (const auto k : shape.topological_order()) {
      auto& nd = nodes[k - 1];
      const Eigen::VectorXd dist = nd.parent == 0
                                       ? Eigen::VectorXd(p.root.col(nd.func))
                                       : Eigen::VectorXd(p.transition[nd.func].col(state[nd.parent - 1]));
      state[k - 1] = draw(dist, gen);
      nd.word = static_cast<thmm::WordId>(draw(p.emission[nd.func].col(state[k - 1]), gen));
    }
    trees.emplace_back(std::move(nodes), t);
  }
  return trees;
}

/// Same trees with every function collapsed to 0 (the unlabeled-tree view).
inline std::vector<thmm::DepTree> collapse_functions(const std::vector<thmm::DepTree>& trees) {
  std::vector<thmm::DepTree> out;
  out.reserve(trees.size());
  for (const auto& t : trees) {
    std::vector<thmm::TreeNode> nodes(t.nodes().begin(), t.nodes().end());
    for (auto& nd : nodes) nd.func = 0;
    out.emplace_back(std::move(nodes), t.sentence_id());
  }
  return out;
}

}  // namespace synthetic

#endif  // THMM_TESTS_SYNTHETIC_HPP
