#ifndef THMM_CORPUS_HPP
#define THMM_CORPUS_HPP

#include <cstddef>
#include <istream>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "thmm/dep_tree.hpp"

namespace thmm {

struct RawToken {
  std::string form;
  std::optional<std::size_t> head;  // 0-based token index; nullopt = root
  std::string label;
};

struct RawSentence {
  std::vector<RawToken> tokens;
  std::size_t sentence_id = 0;
  // Original CoNLL lines, kept only when ColumnMap::keep_lines is set.
  std::vector<std::string> lines;

  std::size_t size() const { return tokens.size(); }
};

/// 1-based CoNLL column positions. Defaults follow CoNLL-X; id = 0 means the
/// input has no ID column.
struct ColumnMap {
  std::size_t id = 1;
  std::size_t form = 2;
  std::size_t head = 7;
  std::size_t deprel = 8;
  bool keep_lines = false;
};

/// Reads tab-separated CoNLL text. Blank lines separate sentences, lines
/// starting with '#' are skipped, as are CoNLL-U multiword ("3-4") and empty
/// ("3.1") nodes. Sentence ids count blocks from 0.
std::vector<RawSentence> parse_conll(std::istream& in, const ColumnMap& columns = {});

/// Keeps sentences with min_len < K < max_len, preserving order.
std::vector<RawSentence> filter_sentences(
    std::vector<RawSentence> sentences, std::size_t min_len,
    std::size_t max_len = std::numeric_limits<std::size_t>::max());

class Vocabulary {
 public:
  static constexpr const char* kUnknown = "<unk>";

  Vocabulary() = default;

  /// Forms occurring at least min_count times, ordered by descending
  /// frequency then lexicographically; the OOV id follows them.
  static Vocabulary build(const std::vector<RawSentence>& sentences,
                          std::size_t min_count);
  /// Rebuilds from an id-ordered word list whose last entry is the OOV form.
  static Vocabulary from_words(std::vector<std::string> id_to_word,
                               std::size_t min_count = 1);

  WordId lookup(const std::string& form) const;
  const std::string& word(WordId id) const { return id_to_word_.at(id); }
  WordId oov_id() const { return static_cast<WordId>(id_to_word_.size() - 1); }
  std::size_t size() const { return id_to_word_.size(); }
  std::size_t min_count() const { return min_count_; }
  const std::vector<std::string>& words() const { return id_to_word_; }

 private:
  std::unordered_map<std::string, WordId> word_to_id_;
  std::vector<std::string> id_to_word_{kUnknown};
  std::size_t min_count_ = 1;
};

/// Syntactic functions kept as distinct conditioning values. Retained labels
/// get ids 0..k'-1 by descending frequency; everything else folds to other_id
/// = k', so S = k' + 1. Exclusion matching is case-insensitive.
class SynFuncInventory {
 public:
  static std::set<std::string> default_exclusions();

  SynFuncInventory() = default;

  static SynFuncInventory build(const std::vector<RawSentence>& sentences,
                                std::size_t top_k,
                                const std::set<std::string>& exclusions =
                                    default_exclusions());
  static SynFuncInventory from_labels(std::vector<std::string> retained,
                                      std::set<std::string> exclusions);

  FuncId lookup(const std::string& label) const;
  FuncId other_id() const { return static_cast<FuncId>(labels_.size()); }
  std::size_t size() const { return labels_.size() + 1; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::set<std::string>& exclusions() const { return exclusions_; }
  /// Label name for a function id; "<other>" for other_id.
  std::string name(FuncId id) const;

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, FuncId> label_to_id_;
  std::set<std::string> exclusions_;
};

enum class Topology { tree, chain };

/// Tree mode copies the head structure; chain mode links node k to k-1 and
/// sets every function to other_id. Both modes reject non-tree heads.
DepTree encode_tree(const RawSentence& sentence, const Vocabulary& vocab,
                    const SynFuncInventory& inventory,
                    Topology topology = Topology::tree);

std::vector<DepTree> encode_corpus(const std::vector<RawSentence>& sentences,
                                   const Vocabulary& vocab,
                                   const SynFuncInventory& inventory,
                                   Topology topology = Topology::tree);

Topology parse_topology(const std::string& name);
std::string to_string(Topology topology);

}  // namespace thmm

#endif  // THMM_CORPUS_HPP
