#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "thmm/errors.hpp"
#include "thmm/representations.hpp"

namespace thmm {

namespace {

std::string format_value(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

RepFormat parse_rep_format(const std::string& name) {
  if (name == "text-vec") return RepFormat::text_vec;
  if (name == "tsv") return RepFormat::tsv;
  throw ConfigError("unknown representation format '" + name + "'");
}

void export_type_reps(const TypeRepTable<double>& table, const Vocabulary& vocab,
                      RepFormat format, std::ostream& out) {
  const auto n = table.vectors.rows();
  if (static_cast<std::size_t>(table.vectors.cols()) != vocab.size())
    throw ConfigError("type table does not match the vocabulary");
  const char sep = format == RepFormat::tsv ? '\t' : ' ';
  if (format == RepFormat::text_vec) out << table.observed() << ' ' << n << '\n';
  for (std::size_t w = 0; w < vocab.size(); ++w) {
    if (!table.contains(static_cast<WordId>(w))) continue;
    out << vocab.word(static_cast<WordId>(w));
    if (format == RepFormat::tsv) out << sep << table.counts[w];
    for (Eigen::Index i = 0; i < n; ++i)
      out << sep << format_value(table.vectors(i, static_cast<Eigen::Index>(w)));
    out << '\n';
  }
  if (!out) throw IoError("failed writing type representations");
}

std::vector<WordVector> read_type_reps(std::istream& in, RepFormat format) {
  std::vector<WordVector> rows;
  std::string line;
  std::size_t dims = 0;
  std::size_t line_no = 0;
  if (format == RepFormat::text_vec) {
    std::size_t types = 0;
    if (!std::getline(in, line)) return rows;
    ++line_no;
    std::istringstream header(line);
    if (!(header >> types >> dims)) throw ParseError(line_no, "bad text-vec header");
    rows.reserve(types);
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    WordVector row;
    fields >> row.word;
    if (format == RepFormat::tsv) fields >> row.count;
    double x;
    while (fields >> x) row.vector.push_back(x);
    if (!fields.eof()) throw ParseError(line_no, "non-numeric vector entry");
    if (dims != 0 && row.vector.size() != dims)
      throw ParseError(line_no, "expected " + std::to_string(dims) + " values");
    rows.push_back(std::move(row));
  }
  return rows;
}

void export_token_reps(std::span<const TokenRep<double>> reps, const Vocabulary& vocab,
                       std::ostream& out) {
  for (const auto& r : reps) {
    out << r.sentence_id << ' ' << r.token_index << ' ' << vocab.word(r.word);
    for (Eigen::Index i = 0; i < r.vector.size(); ++i) out << ' ' << format_value(r.vector(i));
    out << '\n';
  }
  if (!out) throw IoError("failed writing token representations");
}

void write_labeled_conll(std::span<const RawSentence> sentences,
                         std::span<const std::vector<std::size_t>> labels, std::ostream& out) {
  if (sentences.size() != labels.size())
    throw ConfigError("label count does not match sentence count");
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto& lines = sentences[s].lines;
    if (lines.size() != labels[s].size())
      throw ConfigError("sentence " + std::to_string(sentences[s].sentence_id) +
                        " lacks original CoNLL lines");
    for (std::size_t k = 0; k < lines.size(); ++k) out << lines[k] << '\t' << labels[s][k] << '\n';
    out << '\n';
  }
  if (!out) throw IoError("failed writing labeled CoNLL");
}

}  // namespace thmm
