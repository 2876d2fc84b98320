#ifndef THMM_MODEL_HPP
#define THMM_MODEL_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "thmm/errors.hpp"
#include "thmm/rng.hpp"

namespace thmm {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct ModelMeta {
  std::size_t states = 0;     // N
  std::size_t vocab = 0;      // V, including the OOV id
  std::size_t functions = 0;  // S
  std::uint64_t seed = 0;

  bool operator==(const ModelMeta&) const = default;
};

/// Conditional tree-HMM parameters, one dense slice per syntactic function.
///
///   transition[l](i, j) = p(child state i | parent state j, function l)
///   emission[l](w, j)   = p(word w | state j, function l)
///   root(i, l)          = p(state i | synthetic root, function l)
///
/// Every column is a distribution. Column-major storage keeps each
/// (parent-state, function) column contiguous.
template <typename Scalar>
struct ModelParams {
  ModelMeta meta;
  std::vector<Matrix<Scalar>> transition;
  std::vector<Matrix<Scalar>> emission;
  Matrix<Scalar> root;

  ModelParams() = default;
  explicit ModelParams(const ModelMeta& m)
      : meta(m),
        transition(m.functions, Matrix<Scalar>::Zero(m.states, m.states)),
        emission(m.functions, Matrix<Scalar>::Zero(m.vocab, m.states)),
        root(Matrix<Scalar>::Zero(m.states, m.functions)) {}

  std::size_t states() const { return meta.states; }
  std::size_t vocab() const { return meta.vocab; }
  std::size_t functions() const { return meta.functions; }

  template <typename Other>
  ModelParams<Other> cast() const {
    ModelParams<Other> out;
    out.meta = meta;
    for (const auto& t : transition) out.transition.push_back(t.template cast<Other>());
    for (const auto& o : emission) out.emission.push_back(o.template cast<Other>());
    out.root = root.template cast<Other>();
    return out;
  }

  bool operator==(const ModelParams& other) const {
    if (!(meta == other.meta) || root != other.root) return false;
    for (std::size_t l = 0; l < transition.size(); ++l)
      if (transition[l] != other.transition[l] || emission[l] != other.emission[l])
        return false;
    return true;
  }
};

using Model = ModelParams<double>;

inline void check_meta(const ModelMeta& meta) {
  if (meta.states < 1) throw ConfigError("model needs at least one state");
  if (meta.vocab < 2) throw ConfigError("vocabulary needs a word and the OOV id");
  if (meta.functions < 1) throw ConfigError("model needs at least one function");
}

/// Rescales every column to sum to one. Columns with no mass are left as is
/// and reported through the return value.
template <typename Derived>
std::size_t normalize_columns(Eigen::MatrixBase<Derived>& m) {
  std::size_t empty = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const auto sum = m.col(j).sum();
    if (sum > 0)
      m.col(j) /= sum;
    else
      ++empty;
  }
  return empty;
}

namespace detail {

template <typename Scalar>
void fill_uniform01(Matrix<Scalar>& m, std::mt19937_64& gen) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<Scalar>(uniform01(gen));
}

template <typename Scalar>
ModelParams<Scalar> draw_random(const ModelMeta& meta) {
  check_meta(meta);
  ModelParams<Scalar> p(meta);
  auto gen = rng_stream(meta.seed, "init");
  for (auto& t : p.transition) fill_uniform01(t, gen);
  for (auto& o : p.emission) fill_uniform01(o, gen);
  fill_uniform01(p.root, gen);
  return p;
}

template <typename Scalar>
void normalize_all(ModelParams<Scalar>& p) {
  for (auto& t : p.transition) normalize_columns(t);
  for (auto& o : p.emission) normalize_columns(o);
  normalize_columns(p.root);
}

}  // namespace detail

/// Uniform(0,1) draws normalized along each column; deterministic in meta.seed.
template <typename Scalar = double>
ModelParams<Scalar> init_random(const ModelMeta& meta) {
  auto p = detail::draw_random<Scalar>(meta);
  detail::normalize_all(p);
  return p;
}

/// Hard word classes; cluster ids are dense in [0, count).
struct BrownClusterMap {
  std::vector<std::int32_t> cluster_of;  // per word id, -1 when unmapped
  std::size_t count = 0;
};

/// Random initialization with emissions biased towards clusters: O(w, c, l)
/// is multiplied by `factor` for every word w in cluster c before column
/// normalization. State c stands for cluster c; states beyond the cluster
/// count stay unbiased. Transitions match init_random for the same seed.
template <typename Scalar = double>
ModelParams<Scalar> init_brown(const ModelMeta& meta, const BrownClusterMap& clusters,
                               double factor) {
  if (clusters.count > meta.states)
    throw ConfigError(std::to_string(clusters.count) + " clusters exceed " +
                      std::to_string(meta.states) + " states");
  if (!(factor >= 1)) throw ConfigError("cluster boost factor must be >= 1");
  if (clusters.cluster_of.size() > meta.vocab)
    throw ConfigError("cluster map is larger than the vocabulary");
  auto p = detail::draw_random<Scalar>(meta);
  const auto f = static_cast<Scalar>(factor);
  for (auto& o : p.emission)
    for (std::size_t w = 0; w < clusters.cluster_of.size(); ++w)
      if (const auto c = clusters.cluster_of[w]; c >= 0) o(w, c) *= f;
  detail::normalize_all(p);
  return p;
}

struct Violation {
  std::string tensor;  // "meta", "transition", "emission", "root"
  std::size_t column = 0;
  std::size_t function = 0;
  double deviation = 0;  // |column sum - 1|, or offending entry
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;  // at most the first 10
  std::size_t total = 0;

  bool ok() const { return total == 0; }
  std::string to_string() const;
};

inline std::string ValidationReport::to_string() const {
  if (ok()) return "ok";
  std::string out = std::to_string(total) + " violation(s)";
  for (const auto& v : violations) {
    out += "\n  " + v.tensor + " column " + std::to_string(v.column) + " function " +
           std::to_string(v.function) + ": " + v.message;
  }
  return out;
}

/// Checks shapes, entry ranges and column sums (tolerance `eps`).
template <typename Scalar>
ValidationReport validate(const ModelParams<Scalar>& p, double eps = 1e-9) {
  ValidationReport report;
  auto add = [&](Violation v) {
    if (report.violations.size() < 10) report.violations.push_back(std::move(v));
    ++report.total;
  };
  const auto& m = p.meta;
  if (m.states < 1 || m.vocab < 2 || m.functions < 1) {
    add({"meta", 0, 0, 0,
         "invalid dimensions N=" + std::to_string(m.states) + " V=" +
             std::to_string(m.vocab) + " S=" + std::to_string(m.functions)});
    return report;
  }
  const auto n = static_cast<Eigen::Index>(m.states);
  const auto v = static_cast<Eigen::Index>(m.vocab);
  if (p.transition.size() != m.functions || p.emission.size() != m.functions ||
      p.root.rows() != n || p.root.cols() != static_cast<Eigen::Index>(m.functions)) {
    add({"meta", 0, 0, 0, "tensor count or root shape disagrees with meta"});
    return report;
  }
  auto check = [&](const Matrix<Scalar>& mat, const char* name, std::size_t fn,
                   bool column_is_function) {
    for (Eigen::Index j = 0; j < mat.cols(); ++j) {
      const auto col = mat.col(j);
      const std::size_t column = column_is_function ? 0 : static_cast<std::size_t>(j);
      const std::size_t function = column_is_function ? static_cast<std::size_t>(j) : fn;
      const bool out_of_range =
          !col.allFinite() || (col.array() < 0).any() || (col.array() > 1).any();
      const double dev = std::abs(static_cast<double>(col.sum()) - 1.0);
      if (out_of_range)
        add({name, column, function, dev, "entry outside [0, 1]"});
      else if (dev > eps)
        add({name, column, function, dev, "column sums to 1 +/- " + std::to_string(dev)});
    }
  };
  for (std::size_t l = 0; l < m.functions; ++l) {
    if (p.transition[l].rows() != n || p.transition[l].cols() != n ||
        p.emission[l].rows() != v || p.emission[l].cols() != n) {
      add({"meta", 0, l, 0, "slice shape disagrees with meta"});
      continue;
    }
    check(p.transition[l], "transition", l, false);
    check(p.emission[l], "emission", l, false);
  }
  check(p.root, "root", 0, true);
  return report;
}

struct ParamCount {
  std::size_t transitions = 0;  // N^2 S + N S (root columns included)
  std::size_t emissions = 0;    // V N S
};

inline ParamCount param_count(const ModelMeta& meta) {
  const auto n = meta.states, s = meta.functions;
  return {n * n * s + n * s, meta.vocab * n * s};
}

enum class EntropyAggregation {
  column_mean,  // mean over (parent, function) columns, root columns included
  flattened,    // all transition mass pooled into one distribution
};

/// Shannon entropy in bits of a column, with 0 log 0 = 0.
template <typename Derived>
double entropy_bits(const Eigen::MatrixBase<Derived>& col) {
  double h = 0;
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    const double x = static_cast<double>(col(i));
    if (x > 0) h -= x * std::log2(x);
  }
  return h;
}

template <typename Scalar>
double transition_entropy(const ModelParams<Scalar>& p,
                          EntropyAggregation how = EntropyAggregation::column_mean) {
  std::vector<Vector<Scalar>> columns;
  for (const auto& t : p.transition)
    for (Eigen::Index j = 0; j < t.cols(); ++j) columns.emplace_back(t.col(j));
  for (Eigen::Index l = 0; l < p.root.cols(); ++l) columns.emplace_back(p.root.col(l));
  if (columns.empty()) return 0;

  if (how == EntropyAggregation::column_mean) {
    double sum = 0;
    for (const auto& c : columns) sum += entropy_bits(c);
    return sum / static_cast<double>(columns.size());
  }
  double total = 0;
  for (const auto& c : columns) total += static_cast<double>(c.sum());
  double h = 0;
  for (const auto& c : columns)
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      const double x = static_cast<double>(c(i)) / total;
      if (x > 0) h -= x * std::log2(x);
    }
  return h;
}

}  // namespace thmm

#endif  // THMM_MODEL_HPP
