#ifndef THMM_TRAINING_HPP
#define THMM_TRAINING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "thmm/dep_tree.hpp"
#include "thmm/inference.hpp"
#include "thmm/log.hpp"
#include "thmm/model.hpp"
#include "thmm/parallel.hpp"
#include "thmm/rng.hpp"

namespace thmm {

/// Expected counts gathered in the E-step, shaped like ModelParams:
/// transition[l](i, j) for child state i under parent j, emission[l](w, j)
/// for word w at state j, root(i, l) for root-attached nodes.
template <typename Scalar>
struct SufficientStats {
  ModelMeta meta;
  std::vector<Matrix<Scalar>> transition;
  std::vector<Matrix<Scalar>> emission;
  Matrix<Scalar> root;
  std::size_t tree_count = 0;

  SufficientStats() = default;
  explicit SufficientStats(const ModelMeta& m)
      : meta(m),
        transition(m.functions, Matrix<Scalar>::Zero(m.states, m.states)),
        emission(m.functions, Matrix<Scalar>::Zero(m.vocab, m.states)),
        root(Matrix<Scalar>::Zero(m.states, m.functions)) {}

  bool operator==(const SufficientStats& o) const {
    if (!(meta == o.meta) || tree_count != o.tree_count || root != o.root) return false;
    for (std::size_t l = 0; l < transition.size(); ++l)
      if (transition[l] != o.transition[l] || emission[l] != o.emission[l]) return false;
    return true;
  }
};

enum class EmMode { batch, stepwise };

struct TrainConfig {
  EmMode mode = EmMode::stepwise;
  double alpha = 1.0;                // stepwise reduction power, in (0.5, 1]
  std::size_t minibatch_size = 1000;
  std::size_t epochs = 2;
  ProjectionConfig proj;             // applied in training E-steps
  double smoothing = 0.0;            // additive, at the M-step
  double heldout_fraction = 0.05;    // stepwise only
  std::uint64_t seed = 1;
  // Step sizes are (t + step_offset)^-alpha; the usual offset 2 gives
  // eta_0 = 2^-alpha, offset 1 makes the first update replace the
  // running statistics outright.
  double step_offset = 2.0;
  double tolerance = 0.0;            // batch: stop on relative gain below this; 0 = off
  double split_noise = 0.01;
  std::size_t threads = 1;
};

inline void validate_config(const TrainConfig& c) {
  if (c.mode == EmMode::stepwise && !(c.alpha > 0.5 && c.alpha <= 1.0))
    throw ConfigError("stepwise alpha must lie in (0.5, 1]");
  if (c.minibatch_size < 1) throw ConfigError("mini-batch size must be >= 1");
  if (!(c.smoothing >= 0)) throw ConfigError("smoothing must be >= 0");
  if (!(c.heldout_fraction >= 0 && c.heldout_fraction < 1))
    throw ConfigError("held-out fraction must lie in [0, 1)");
  if (!(c.step_offset >= 1)) throw ConfigError("step offset must be >= 1");
  if (!(c.tolerance >= 0)) throw ConfigError("tolerance must be >= 0");
  if (!(c.split_noise > 0)) throw ConfigError("split noise must be > 0");
  if (c.proj.enabled && c.proj.keep_k < 1) throw ConfigError("keep-k must be >= 1");
}

/// Stepwise interpolation weight eta_t = (t + offset)^-alpha.
inline double step_size(std::uint64_t t, double alpha, double offset = 2.0) {
  return std::pow(static_cast<double>(t) + offset, -alpha);
}

/// Adds one tree's posterior expectations to `stats`; returns the tree's
/// log-likelihood under `params` (with projection, if enabled).
template <typename Scalar>
Scalar accumulate_estep(const DepTree& tree, const ModelParams<Scalar>& params,
                        const ProjectionConfig& proj, SufficientStats<Scalar>& stats) {
  const auto bt = infer(tree, params, proj);
  // Sum the tree's contribution per cell before touching the running totals, so a
  // tree's share is added as a single term.
  std::vector<std::size_t> order(tree.size());
  std::iota(order.begin(), order.end(), std::size_t{1});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = tree.node(a);
    const auto& y = tree.node(b);
    return std::tuple(x.func, x.parent == 0, x.word, a) < std::tuple(y.func, y.parent == 0, y.word, b);
  });
  Vector<Scalar> row;
  Matrix<Scalar> edges;
  for (std::size_t g = 0; g < order.size();) {
    const auto& head = tree.node(order[g]);
    std::size_t end = g + 1;
    while (end < order.size() && tree.node(order[end]).func == head.func &&
           (tree.node(order[end]).parent == 0) == (head.parent == 0))
      ++end;
    if (head.parent == 0) {
      row = bt.node_posterior[order[g] - 1];
      for (std::size_t i = g + 1; i < end; ++i) row += bt.node_posterior[order[i] - 1];
      stats.root.col(head.func) += row;
    } else {
      edges = bt.edge_posterior[order[g] - 1];
      for (std::size_t i = g + 1; i < end; ++i) edges += bt.edge_posterior[order[i] - 1];
      stats.transition[head.func] += edges;
    }
    g = end;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = tree.node(a);
    const auto& y = tree.node(b);
    return std::tuple(x.func, x.word, a) < std::tuple(y.func, y.word, b);
  });
  for (std::size_t g = 0; g < order.size();) {
    const auto& head = tree.node(order[g]);
    std::size_t end = g + 1;
    while (end < order.size() && tree.node(order[end]).func == head.func &&
           tree.node(order[end]).word == head.word)
      ++end;
    row = bt.node_posterior[order[g] - 1];
    for (std::size_t i = g + 1; i < end; ++i) row += bt.node_posterior[order[i] - 1];
    stats.emission[head.func].row(head.word) += row.transpose();
    g = end;
  }
  ++stats.tree_count;
  return bt.log_likelihood;
}

namespace detail {

inline constexpr std::size_t kChunkSize = 32;

template <typename Scalar>
void normalize_with_fallback(Matrix<Scalar>& m, double smoothing, const Matrix<Scalar>* fallback,
                             std::size_t& empty) {
  if (smoothing > 0) m.array() += static_cast<Scalar>(smoothing);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const Scalar sum = m.col(j).sum();
    if (sum > 0) {
      m.col(j) /= sum;
    } else {
      ++empty;
      if (fallback)
        m.col(j) = fallback->col(j);
      else
        m.col(j).setConstant(Scalar(1) / static_cast<Scalar>(m.rows()));
    }
  }
}

template <typename Scalar>
ModelParams<Scalar> m_step_impl(const SufficientStats<Scalar>& stats, double smoothing,
                                const ModelParams<Scalar>* fallback) {
  if (!(smoothing >= 0)) throw ConfigError("smoothing must be >= 0");
  if (fallback && !(fallback->meta.states == stats.meta.states &&
                    fallback->meta.vocab == stats.meta.vocab &&
                    fallback->meta.functions == stats.meta.functions))
    throw ConfigError("fallback parameters disagree with statistics");
  ModelParams<Scalar> p;
  p.meta = stats.meta;
  p.transition = stats.transition;
  p.emission = stats.emission;
  p.root = stats.root;
  std::size_t empty = 0;
  for (std::size_t l = 0; l < p.meta.functions; ++l) {
    normalize_with_fallback(p.transition[l], smoothing,
                            fallback ? &fallback->transition[l] : nullptr, empty);
    normalize_with_fallback(p.emission[l], smoothing,
                            fallback ? &fallback->emission[l] : nullptr, empty);
  }
  normalize_with_fallback(p.root, smoothing, fallback ? &fallback->root : nullptr, empty);
  if (empty > 0)
    log::warn(std::to_string(empty) + " parameter column(s) without expected counts; " +
              (fallback ? "kept previous values" : "set to uniform"));
  return p;
}

}  // namespace detail

/// Maximum-likelihood parameters from expected counts: each column of
/// (counts + smoothing) normalized over the child state / word / root
/// state axis. Columns with no mass become uniform.
template <typename Scalar>
ModelParams<Scalar> m_step(const SufficientStats<Scalar>& stats, double smoothing) {
  return detail::m_step_impl<Scalar>(stats, smoothing, nullptr);
}

/// As above, but columns with no mass keep their value from `previous`.
template <typename Scalar>
ModelParams<Scalar> m_step(const SufficientStats<Scalar>& stats, double smoothing,
                           const ModelParams<Scalar>& previous) {
  return detail::m_step_impl<Scalar>(stats, smoothing, &previous);
}

/// E-step over trees[indices[...]], in that order, in fixed-size chunks
/// merged in chunk order: the result does not depend on `threads`.
/// Returns the summed log-likelihood.
template <typename Scalar>
double corpus_estep(std::span<const DepTree> trees, std::span<const std::size_t> indices,
                    const ModelParams<Scalar>& params, const ProjectionConfig& proj,
                    std::size_t threads, SufficientStats<Scalar>& stats) {
  const std::size_t chunks = (indices.size() + detail::kChunkSize - 1) / detail::kChunkSize;
  const std::size_t slots = std::max<std::size_t>(1, std::min(threads, chunks));
  std::vector<SufficientStats<Scalar>> partial(slots, SufficientStats<Scalar>(stats.meta));
  std::vector<std::vector<WordId>> touched(slots);
  std::vector<double> chunk_ll(slots, 0.0);

  double total = 0;
  chunked_waves(
      chunks, slots,
      [&](std::size_t slot, std::size_t chunk) {
        auto& part = partial[slot];
        double ll = 0;
        touched[slot].clear();
        const auto end = std::min(indices.size(), (chunk + 1) * detail::kChunkSize);
        for (std::size_t i = chunk * detail::kChunkSize; i < end; ++i) {
          const auto& tree = trees[indices[i]];
          ll += static_cast<double>(accumulate_estep(tree, params, proj, part));
          for (const auto& node : tree.nodes()) touched[slot].push_back(node.word);
        }
        auto& words = touched[slot];
        std::sort(words.begin(), words.end());
        words.erase(std::unique(words.begin(), words.end()), words.end());
        chunk_ll[slot] = ll;
      },
      [&](std::size_t slot, std::size_t) {
        auto& part = partial[slot];
        for (std::size_t l = 0; l < stats.meta.functions; ++l) {
          stats.transition[l] += part.transition[l];
          part.transition[l].setZero();
          for (const auto w : touched[slot]) {
            stats.emission[l].row(w) += part.emission[l].row(w);
            part.emission[l].row(w).setZero();
          }
        }
        stats.root += part.root;
        part.root.setZero();
        stats.tree_count += part.tree_count;
        part.tree_count = 0;
        total += chunk_ll[slot];
      });
  return total;
}

/// Exact summed log-likelihood over trees[indices[...]]; thread-count
/// independent.
template <typename Scalar>
double corpus_log_likelihood(std::span<const DepTree> trees, std::span<const std::size_t> indices,
                             const ModelParams<Scalar>& params, std::size_t threads = 1) {
  const std::size_t chunks = (indices.size() + detail::kChunkSize - 1) / detail::kChunkSize;
  const std::size_t slots = std::max<std::size_t>(1, std::min(threads, chunks));
  std::vector<double> chunk_ll(slots, 0.0);
  double total = 0;
  chunked_waves(
      chunks, slots,
      [&](std::size_t slot, std::size_t chunk) {
        double ll = 0;
        const auto end = std::min(indices.size(), (chunk + 1) * detail::kChunkSize);
        for (std::size_t i = chunk * detail::kChunkSize; i < end; ++i)
          ll += static_cast<double>(tree_log_likelihood(trees[indices[i]], params));
        chunk_ll[slot] = ll;
      },
      [&](std::size_t slot, std::size_t) { total += chunk_ll[slot]; });
  return total;
}

template <typename Scalar>
double corpus_log_likelihood(std::span<const DepTree> trees, const ModelParams<Scalar>& params,
                             std::size_t threads = 1) {
  std::vector<std::size_t> all(trees.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return corpus_log_likelihood(trees, std::span<const std::size_t>(all), params, threads);
}

/// Running statistics and counters of stepwise EM; enough to resume.
template <typename Scalar>
struct StepwiseState {
  SufficientStats<Scalar> mu;
  std::uint64_t updates = 0;  // t
  std::uint64_t epoch = 0;    // completed epochs
  std::uint64_t shuffle_seed = 0;
};

template <typename Scalar>
struct TrainResult {
  ModelParams<Scalar> params;
  // Batch: corpus log-likelihood before each M-step. Stepwise: held-out
  // log-likelihood of the initial parameters, then after every epoch
  // (empty without a held-out set).
  std::vector<double> trace;
  std::optional<StepwiseState<Scalar>> state;
};

struct HeldoutSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> heldout;
};

/// Reserves round(fraction * n) randomly chosen trees (at least one tree
/// stays in training). Both index lists are ascending.
inline HeldoutSplit split_heldout(std::size_t n, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  auto gen = rng_stream(seed, "heldout");
  shuffle(perm.begin(), perm.end(), gen);
  auto h = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n > 0) h = std::min(h, n - 1);
  HeldoutSplit split;
  split.heldout.assign(perm.end() - static_cast<std::ptrdiff_t>(h), perm.end());
  split.train.assign(perm.begin(), perm.end() - static_cast<std::ptrdiff_t>(h));
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.heldout.begin(), split.heldout.end());
  return split;
}

/// Full-corpus EM for config.epochs iterations (or until the relative gain
/// drops below config.tolerance).
template <typename Scalar>
TrainResult<Scalar> train_batch_em(std::span<const DepTree> corpus,
                                   const ModelParams<Scalar>& params0,
                                   const TrainConfig& config) {
  validate_config(config);
  TrainResult<Scalar> result{params0, {}, std::nullopt};
  std::vector<std::size_t> all(corpus.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t it = 0; it < config.epochs; ++it) {
    SufficientStats<Scalar> stats(result.params.meta);
    const double ll = corpus_estep(corpus, std::span<const std::size_t>(all), result.params,
                                   config.proj, config.threads, stats);
    result.trace.push_back(ll);
    log::info("batch EM iteration " + std::to_string(it + 1) + ": log-likelihood " +
              std::to_string(ll));
    result.params = m_step(stats, config.smoothing, result.params);
    if (config.tolerance > 0 && result.trace.size() >= 2) {
      const double prev = result.trace[result.trace.size() - 2];
      if ((ll - prev) / std::abs(prev) < config.tolerance) break;
    }
  }
  return result;
}

/// Pseudo-counts worth one training corpus, spread evenly across columns
/// and shaped like `params`; the starting point of the running statistics.
template <typename Scalar>
SufficientStats<Scalar> prior_stats(const ModelParams<Scalar>& params,
                                    std::span<const DepTree> corpus,
                                    std::span<const std::size_t> indices) {
  double nodes = 0, roots = 0;
  for (const auto i : indices)
    for (const auto& node : corpus[i].nodes()) {
      nodes += 1;
      if (node.parent == 0) roots += 1;
    }
  const double columns = static_cast<double>(params.states() * params.functions());
  SufficientStats<Scalar> mu(params.meta);
  for (std::size_t l = 0; l < params.functions(); ++l) {
    mu.transition[l] = params.transition[l] * static_cast<Scalar>((nodes - roots) / columns);
    mu.emission[l] = params.emission[l] * static_cast<Scalar>(nodes / columns);
  }
  mu.root = params.root * static_cast<Scalar>(roots / static_cast<double>(params.functions()));
  return mu;
}

template <typename Scalar>
using EpochHook = std::function<void(const ModelParams<Scalar>&, const StepwiseState<Scalar>&)>;

/// Mini-batch stepwise EM. The running statistics mu start as prior_stats
/// of params0; after update t over mini-batch B
///   mu <- (1 - eta_t) mu + eta_t (n / |B|) s_B,   eta_t = (t + offset)^-alpha
/// and the parameters are re-estimated from mu. Training trees are shuffled
/// every epoch; each mini-batch is accumulated in corpus order.
template <typename Scalar>
TrainResult<Scalar> train_stepwise_em(std::span<const DepTree> corpus,
                                      const ModelParams<Scalar>& params0,
                                      const TrainConfig& config,
                                      const StepwiseState<Scalar>* resume = nullptr,
                                      const EpochHook<Scalar>& on_epoch = {}) {
  validate_config(config);
  if (corpus.empty()) throw ConfigError("cannot train on an empty corpus");
  const auto split = split_heldout(corpus.size(), config.heldout_fraction, config.seed);
  const std::span<const std::size_t> heldout(split.heldout);
  const double n_train = static_cast<double>(split.train.size());

  TrainResult<Scalar> result{params0, {}, std::nullopt};
  StepwiseState<Scalar> state;
  if (resume) {
    state = *resume;
    if (!(state.mu.meta == params0.meta))
      throw ConfigError("resume state does not match the model dimensions");
  } else {
    state.mu = prior_stats(params0, corpus, std::span<const std::size_t>(split.train));
    state.shuffle_seed = config.seed;
  }

  auto heldout_ll = [&](const ModelParams<Scalar>& p, const char* when) {
    if (heldout.empty()) return;
    const double ll = corpus_log_likelihood(corpus, heldout, p, config.threads);
    result.trace.push_back(ll);
    log::info(std::string("held-out log-likelihood ") + when + ": " + std::to_string(ll));
  };
  heldout_ll(result.params, "initial");

  std::vector<std::size_t> order;
  std::vector<std::size_t> batch;
  for (std::size_t epoch = state.epoch; epoch < config.epochs; ++epoch) {
    order = split.train;
    auto gen = rng_stream(state.shuffle_seed, "shuffle", epoch);
    shuffle(order.begin(), order.end(), gen);

    for (std::size_t start = 0; start < order.size(); start += config.minibatch_size) {
      const auto end = std::min(order.size(), start + config.minibatch_size);
      batch.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                   order.begin() + static_cast<std::ptrdiff_t>(end));
      std::sort(batch.begin(), batch.end());

      SufficientStats<Scalar> sb(result.params.meta);
      corpus_estep(corpus, std::span<const std::size_t>(batch), result.params, config.proj,
                   config.threads, sb);

      const double eta = step_size(state.updates, config.alpha, config.step_offset);
      const auto keep = static_cast<Scalar>(1.0 - eta);
      const auto gain = static_cast<Scalar>(eta * (n_train / static_cast<double>(batch.size())));
      auto& mu = state.mu;
      for (std::size_t l = 0; l < mu.meta.functions; ++l) {
        mu.transition[l] = keep * mu.transition[l] + gain * sb.transition[l];
        mu.emission[l] = keep * mu.emission[l] + gain * sb.emission[l];
      }
      mu.root = keep * mu.root + gain * sb.root;
      mu.tree_count = sb.tree_count;
      ++state.updates;

      result.params = m_step(mu, config.smoothing, result.params);
    }
    state.epoch = epoch + 1;
    heldout_ll(result.params, ("after epoch " + std::to_string(epoch + 1)).c_str());
    if (on_epoch) on_epoch(result.params, state);
  }
  result.state = std::move(state);
  return result;
}

template <typename Scalar>
TrainResult<Scalar> train(std::span<const DepTree> corpus, const ModelParams<Scalar>& params0,
                          const TrainConfig& config) {
  return config.mode == EmMode::batch ? train_batch_em(corpus, params0, config)
                                      : train_stepwise_em(corpus, params0, config);
}

/// Doubles the state space: state s becomes clones 2s and 2s+1. Transition
/// mass into s is halved between its clones, every cloned entry is scaled by
/// (1 + u) with u ~ U(-noise, noise), and all columns are renormalized.
template <typename Scalar>
ModelParams<Scalar> split_states(const ModelParams<Scalar>& params, double noise,
                                 std::uint64_t seed) {
  if (!(noise > 0)) throw ConfigError("split noise must be > 0");
  auto gen = rng_stream(seed, "split");
  auto jitter = [&] { return static_cast<Scalar>(1.0 + noise * (2.0 * uniform01(gen) - 1.0)); };

  const auto n = static_cast<Eigen::Index>(params.states());
  ModelMeta meta = params.meta;
  meta.states *= 2;
  ModelParams<Scalar> out(meta);
  for (std::size_t l = 0; l < meta.functions; ++l) {
    const auto& t = params.transition[l];
    auto& t2 = out.transition[l];
    for (Eigen::Index j2 = 0; j2 < 2 * n; ++j2)
      for (Eigen::Index i2 = 0; i2 < 2 * n; ++i2)
        t2(i2, j2) = t(i2 / 2, j2 / 2) / 2 * jitter();

    const auto& o = params.emission[l];
    auto& o2 = out.emission[l];
    for (Eigen::Index j2 = 0; j2 < 2 * n; ++j2)
      for (Eigen::Index w = 0; w < o.rows(); ++w) o2(w, j2) = o(w, j2 / 2) * jitter();
  }
  for (Eigen::Index l = 0; l < out.root.cols(); ++l)
    for (Eigen::Index i2 = 0; i2 < 2 * n; ++i2)
      out.root(i2, l) = params.root(i2 / 2, l) / 2 * jitter();
  detail::normalize_all(out);
  return out;
}

struct SplitRound {
  std::size_t epochs = 0;
  bool split_after = false;
};

/// Alternates training rounds (config.mode) with state splits per schedule.
/// The returned trace concatenates the per-round traces.
template <typename Scalar>
TrainResult<Scalar> train_with_splitting(std::span<const DepTree> corpus,
                                         const ModelParams<Scalar>& params0,
                                         const TrainConfig& config,
                                         const std::vector<SplitRound>& schedule) {
  if (schedule.empty()) throw ConfigError("split schedule is empty");
  if (corpus.empty()) throw ConfigError("cannot train on an empty corpus");
  TrainResult<Scalar> result{params0, {}, std::nullopt};
  for (std::size_t r = 0; r < schedule.size(); ++r) {
    TrainConfig round = config;
    round.epochs = schedule[r].epochs;
    auto part = train(corpus, result.params, round);
    result.params = std::move(part.params);
    result.trace.insert(result.trace.end(), part.trace.begin(), part.trace.end());
    if (schedule[r].split_after) {
      result.params = split_states(result.params, config.split_noise,
                                   splitmix64(config.seed + r));
      log::info("split to " + std::to_string(result.params.states()) + " states");
    }
  }
  return result;
}

}  // namespace thmm

#endif  // THMM_TRAINING_HPP
