#ifndef THMM_REPRESENTATIONS_HPP
#define THMM_REPRESENTATIONS_HPP

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "thmm/corpus.hpp"
#include "thmm/inference.hpp"
#include "thmm/parallel.hpp"

namespace thmm {

template <typename Scalar>
struct TokenRep {
  std::size_t sentence_id = 0;
  std::size_t token_index = 0;  // 1-based, as in CoNLL
  WordId word = 0;
  Vector<Scalar> vector;
};

/// Context-sensitive representation: the posterior state distribution of
/// every token of one tree.
template <typename Scalar>
std::vector<TokenRep<Scalar>> post_token(const DepTree& tree, const ModelParams<Scalar>& params,
                                         const ProjectionConfig& proj = {}) {
  const auto bt = infer(tree, params, proj);
  std::vector<TokenRep<Scalar>> reps;
  reps.reserve(tree.size());
  for (std::size_t k = 1; k <= tree.size(); ++k)
    reps.push_back({tree.sentence_id(), k, tree.node(k).word, bt.node_posterior[k - 1]});
  return reps;
}

/// Static per-type vectors: column w of `vectors` is the mean token posterior
/// of word w, `counts[w]` its number of occurrences (0 = never observed).
template <typename Scalar>
struct TypeRepTable {
  Matrix<Scalar> vectors;  // N x V
  std::vector<std::size_t> counts;

  bool contains(WordId w) const { return w < counts.size() && counts[w] > 0; }
  auto vector(WordId w) const { return vectors.col(w); }
  std::size_t observed() const {
    std::size_t n = 0;
    for (auto c : counts) n += c > 0;
    return n;
  }
};

/// Averages token posteriors per word type over the corpus. Sums are
/// Neumaier-compensated and taken in tree order, so the table does not
/// depend on the thread count and barely on corpus order.
template <typename Scalar>
TypeRepTable<Scalar> post_type(std::span<const DepTree> corpus, const ModelParams<Scalar>& params,
                               std::size_t threads = 1, const ProjectionConfig& proj = {}) {
  if (corpus.empty()) throw ConfigError("post-type needs a non-empty corpus");
  const auto n = static_cast<Eigen::Index>(params.states());
  const auto v = static_cast<Eigen::Index>(params.vocab());
  Matrix<Scalar> sum = Matrix<Scalar>::Zero(n, v);
  Matrix<Scalar> comp = Matrix<Scalar>::Zero(n, v);
  std::vector<std::size_t> counts(static_cast<std::size_t>(v), 0);

  constexpr std::size_t chunk = 32;
  const std::size_t chunks = (corpus.size() + chunk - 1) / chunk;
  const std::size_t slots = std::max<std::size_t>(1, std::min(threads, chunks));
  std::vector<std::vector<TokenRep<Scalar>>> reps(slots);
  chunked_waves(
      chunks, slots,
      [&](std::size_t slot, std::size_t c) {
        reps[slot].clear();
        const auto end = std::min(corpus.size(), (c + 1) * chunk);
        for (std::size_t t = c * chunk; t < end; ++t) {
          auto r = post_token(corpus[t], params, proj);
          reps[slot].insert(reps[slot].end(), std::make_move_iterator(r.begin()),
                            std::make_move_iterator(r.end()));
        }
      },
      [&](std::size_t slot, std::size_t) {
        for (const auto& rep : reps[slot]) {
          const auto w = rep.word;
          ++counts[w];
          for (Eigen::Index i = 0; i < n; ++i) {
            const Scalar x = rep.vector(i);
            const Scalar s = sum(i, w);
            const Scalar t = s + x;
            comp(i, w) += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
            sum(i, w) = t;
          }
        }
      });

  TypeRepTable<Scalar> table;
  table.vectors = Matrix<Scalar>::Zero(n, v);
  for (Eigen::Index w = 0; w < v; ++w)
    if (counts[w] > 0)
      table.vectors.col(w) =
          (sum.col(w) + comp.col(w)) / static_cast<Scalar>(counts[static_cast<std::size_t>(w)]);
  table.counts = std::move(counts);
  return table;
}

/// Max-product state labels for every tree.
template <typename Scalar>
std::vector<std::vector<std::size_t>> decode_labels(std::span<const DepTree> corpus,
                                                    const ModelParams<Scalar>& params,
                                                    std::size_t threads = 1) {
  std::vector<std::vector<std::size_t>> labels(corpus.size());
  const std::size_t slots = std::max<std::size_t>(1, std::min(threads, corpus.size()));
  run_slots(slots, slots, [&](std::size_t slot) {
    for (std::size_t t = slot; t < corpus.size(); t += slots)
      labels[t] = max_product_decode(corpus[t], params);
  });
  return labels;
}

enum class RepFormat { text_vec, tsv };

RepFormat parse_rep_format(const std::string& name);

/// text-vec: "<types> <N>" header, then "word v1 ... vN" per observed type
/// in id order, values with 6 significant digits. tsv: "word<TAB>Z<TAB>v1
/// ... vN" rows, no header. The OOV id is written as "<unk>".
void export_type_reps(const TypeRepTable<double>& table, const Vocabulary& vocab,
                      RepFormat format, std::ostream& out);

/// Reads a text-vec or tsv file back as (word, vector) rows.
struct WordVector {
  std::string word;
  std::size_t count = 0;  // tsv only
  std::vector<double> vector;
};
std::vector<WordVector> read_type_reps(std::istream& in, RepFormat format);

/// One row per token: "sentence_id token_index word v1 ... vN".
void export_token_reps(std::span<const TokenRep<double>> reps, const Vocabulary& vocab,
                       std::ostream& out);

/// CoNLL lines of each sentence with the state label appended as a last
/// column. Sentences must carry their original lines.
void write_labeled_conll(std::span<const RawSentence> sentences,
                         std::span<const std::vector<std::size_t>> labels, std::ostream& out);

}  // namespace thmm

#endif  // THMM_REPRESENTATIONS_HPP
