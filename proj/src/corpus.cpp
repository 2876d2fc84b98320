#include "thmm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>

#include "thmm/errors.hpp"

namespace thmm {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Sorts (item, count) pairs by descending count, ties lexicographic.
std::vector<std::pair<std::string, std::size_t>> by_frequency(
    const std::map<std::string, std::size_t>& counts) {
  std::vector<std::pair<std::string, std::size_t>> sorted(counts.begin(), counts.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return sorted;
}

struct PendingSentence {
  RawSentence sentence;
  std::vector<std::size_t> raw_heads;  // as read, 0 = root
  std::size_t columns = 0;
};

void finish(PendingSentence& pending, std::vector<RawSentence>& out) {
  auto& s = pending.sentence;
  const std::size_t k = s.tokens.size();
  for (std::size_t i = 0; i < k; ++i) {
    const auto h = pending.raw_heads[i];
    if (h > k)
      throw StructuralError(s.sentence_id, "token " + std::to_string(i + 1) +
                                               " has head " + std::to_string(h) +
                                               " beyond sentence length " +
                                               std::to_string(k));
    if (h != 0) s.tokens[i].head = h - 1;
  }
  out.push_back(std::move(s));
  pending = PendingSentence{};
}

}  // namespace

std::vector<RawSentence> parse_conll(std::istream& in, const ColumnMap& columns) {
  const std::size_t needed =
      std::max({columns.id, columns.form, columns.head, columns.deprel});
  if (columns.form == 0 || columns.head == 0 || columns.deprel == 0)
    throw ConfigError("CoNLL column positions are 1-based");

  std::vector<RawSentence> out;
  PendingSentence pending;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) {
      if (!pending.sentence.tokens.empty()) {
        pending.sentence.sentence_id = out.size();
        finish(pending, out);
      }
      continue;
    }
    if (line.front() == '#') continue;

    const auto fields = split_tabs(line);
    if (fields.size() < needed)
      throw ParseError(line_no, "expected at least " + std::to_string(needed) +
                                    " tab-separated columns, found " +
                                    std::to_string(fields.size()));
    if (pending.columns != 0 && fields.size() != pending.columns)
      throw ParseError(line_no, "column count " + std::to_string(fields.size()) +
                                    " differs from " + std::to_string(pending.columns) +
                                    " earlier in the sentence");
    pending.columns = fields.size();

    if (columns.id != 0 &&
        fields[columns.id - 1].find_first_of("-.") != std::string_view::npos)
      continue;

    const auto head_field = fields[columns.head - 1];
    std::size_t head = 0;
    const auto [ptr, ec] =
        std::from_chars(head_field.data(), head_field.data() + head_field.size(), head);
    if (ec != std::errc{} || ptr != head_field.data() + head_field.size())
      throw ParseError(line_no, "non-numeric head '" + std::string(head_field) + "'");

    pending.sentence.tokens.push_back(
        RawToken{std::string(fields[columns.form - 1]), std::nullopt,
                 std::string(fields[columns.deprel - 1])});
    pending.raw_heads.push_back(head);
    if (columns.keep_lines) pending.sentence.lines.push_back(line);
  }
  if (!pending.sentence.tokens.empty()) {
    pending.sentence.sentence_id = out.size();
    finish(pending, out);
  }
  return out;
}

std::vector<RawSentence> filter_sentences(std::vector<RawSentence> sentences,
                                          std::size_t min_len, std::size_t max_len) {
  if (min_len > max_len) throw ConfigError("min-len exceeds max-len");
  std::erase_if(sentences, [&](const RawSentence& s) {
    return !(s.size() > min_len && s.size() < max_len);
  });
  return sentences;
}

Vocabulary Vocabulary::build(const std::vector<RawSentence>& sentences,
                             std::size_t min_count) {
  if (min_count < 1) throw ConfigError("min-count must be at least 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences)
    for (const auto& t : s.tokens)
      if (t.form != kUnknown) ++counts[t.form];

  std::vector<std::string> words;
  for (auto& [form, count] : by_frequency(counts))
    if (count >= min_count) words.push_back(form);
  words.emplace_back(kUnknown);
  return from_words(std::move(words), min_count);
}

Vocabulary Vocabulary::from_words(std::vector<std::string> id_to_word,
                                  std::size_t min_count) {
  if (id_to_word.empty() || id_to_word.back() != kUnknown)
    throw ConfigError("vocabulary must end with the OOV form");
  Vocabulary v;
  v.min_count_ = min_count;
  v.id_to_word_ = std::move(id_to_word);
  for (std::size_t i = 0; i + 1 < v.id_to_word_.size(); ++i) {
    if (!v.word_to_id_.emplace(v.id_to_word_[i], static_cast<WordId>(i)).second)
      throw ConfigError("duplicate vocabulary entry '" + v.id_to_word_[i] + "'");
  }
  return v;
}

WordId Vocabulary::lookup(const std::string& form) const {
  const auto it = word_to_id_.find(form);
  return it == word_to_id_.end() ? oov_id() : it->second;
}

std::set<std::string> SynFuncInventory::default_exclusions() {
  return {"p", "punct", "det"};
}

SynFuncInventory SynFuncInventory::build(const std::vector<RawSentence>& sentences,
                                         std::size_t top_k,
                                         const std::set<std::string>& exclusions) {
  std::set<std::string> excluded;
  for (const auto& e : exclusions) excluded.insert(lower(e));

  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences)
    for (const auto& t : s.tokens)
      if (!excluded.contains(lower(t.label))) ++counts[t.label];

  std::vector<std::string> retained;
  for (auto& [label, count] : by_frequency(counts)) {
    if (retained.size() == top_k) break;
    retained.push_back(label);
  }
  return from_labels(std::move(retained), std::move(excluded));
}

SynFuncInventory SynFuncInventory::from_labels(std::vector<std::string> retained,
                                               std::set<std::string> exclusions) {
  SynFuncInventory inv;
  for (const auto& e : exclusions) inv.exclusions_.insert(lower(e));
  inv.labels_ = std::move(retained);
  for (std::size_t i = 0; i < inv.labels_.size(); ++i) {
    if (inv.exclusions_.contains(lower(inv.labels_[i])))
      throw ConfigError("retained label '" + inv.labels_[i] + "' is excluded");
    if (!inv.label_to_id_.emplace(inv.labels_[i], static_cast<FuncId>(i)).second)
      throw ConfigError("duplicate function label '" + inv.labels_[i] + "'");
  }
  return inv;
}

FuncId SynFuncInventory::lookup(const std::string& label) const {
  const auto it = label_to_id_.find(label);
  return it == label_to_id_.end() ? other_id() : it->second;
}

std::string SynFuncInventory::name(FuncId id) const {
  return id < labels_.size() ? labels_[id] : std::string("<other>");
}

DepTree encode_tree(const RawSentence& sentence, const Vocabulary& vocab,
                    const SynFuncInventory& inventory, Topology topology) {
  const std::size_t k_max = sentence.size();
  std::size_t roots = 0;
  std::vector<TreeNode> nodes(k_max);
  for (std::size_t i = 0; i < k_max; ++i) {
    const auto& tok = sentence.tokens[i];
    if (tok.head && *tok.head >= k_max)
      throw StructuralError(sentence.sentence_id,
                            "token " + std::to_string(i + 1) + " has out-of-range head");
    if (!tok.head) ++roots;
    nodes[i].word = vocab.lookup(tok.form);
    nodes[i].func = inventory.lookup(tok.label);
    nodes[i].parent = tok.head ? static_cast<std::uint32_t>(*tok.head + 1) : 0;
  }
  if (k_max > 0 && roots != 1)
    throw StructuralError(sentence.sentence_id,
                          std::to_string(roots) + " root-attached tokens, expected 1");
  // Validates acyclicity of the original heads in both modes.
  DepTree tree(nodes, sentence.sentence_id);
  if (topology == Topology::tree) return tree;

  for (std::size_t i = 0; i < k_max; ++i) {
    nodes[i].parent = static_cast<std::uint32_t>(i);
    nodes[i].func = inventory.other_id();
  }
  return DepTree(std::move(nodes), sentence.sentence_id);
}

std::vector<DepTree> encode_corpus(const std::vector<RawSentence>& sentences,
                                   const Vocabulary& vocab,
                                   const SynFuncInventory& inventory, Topology topology) {
  std::vector<DepTree> trees;
  trees.reserve(sentences.size());
  for (const auto& s : sentences) trees.push_back(encode_tree(s, vocab, inventory, topology));
  return trees;
}

Topology parse_topology(const std::string& name) {
  if (name == "tree") return Topology::tree;
  if (name == "chain") return Topology::chain;
  throw ConfigError("unknown topology '" + name + "'");
}

std::string to_string(Topology topology) {
  return topology == Topology::tree ? "tree" : "chain";
}

}  // namespace thmm
