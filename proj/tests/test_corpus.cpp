#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "support/synthetic.hpp"
#include "thmm/corpus.hpp"
#include "thmm/errors.hpp"

using namespace thmm;

namespace {

ColumnMap three_columns() {
  ColumnMap m;
  m.id = 0;
  m.form = 1;
  m.head = 2;
  m.deprel = 3;
  return m;
}

std::vector<RawSentence> parse(const std::string& text, const ColumnMap& m = three_columns()) {
  std::istringstream in(text);
  return parse_conll(in, m);
}

RawSentence sentence_of_length(std::size_t k, std::size_t id = 0) {
  RawSentence s;
  s.sentence_id = id;
  for (std::size_t i = 0; i < k; ++i)
    s.tokens.push_back({"w" + std::to_string(i), i == 0 ? std::nullopt : std::optional<std::size_t>(0), "dep"});
  return s;
}

}  // namespace

TEST_CASE("parse_conll maps heads to 0-based indices with a root marker") {
  const auto s = parse("The\t2\tNMOD\ncat\t0\tROOT\n");
  REQUIRE(s.size() == 1);
  REQUIRE(s[0].size() == 2);
  CHECK(s[0].tokens[0].form == "The");
  CHECK(s[0].tokens[0].head == std::optional<std::size_t>(1));
  CHECK(s[0].tokens[0].label == "NMOD");
  CHECK_FALSE(s[0].tokens[1].head.has_value());
  CHECK(s[0].tokens[1].label == "ROOT");
}

TEST_CASE("parse_conll on an empty stream") {
  CHECK(parse("").empty());
  CHECK(parse("\n\n  \n").empty());
}

TEST_CASE("parse_conll reads CoNLL-X blocks and skips comments and multiword tokens") {
  const std::string text =
      "# sent 1\n"
      "1\tThe\tthe\tDT\tDT\t_\t2\tNMOD\t_\t_\n"
      "2\tcat\tcat\tNN\tNN\t_\t3\tSUB\t_\t_\n"
      "3\tsat\tsit\tVBD\tVBD\t_\t0\tROOT\t_\t_\n"
      "\n"
      "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "1\tdo\tdo\tVB\tVB\t_\t0\tROOT\t_\t_\n"
      "2\tn't\tnot\tRB\tRB\t_\t1\tADV\t_\t_\n";
  const auto s = parse(text, ColumnMap{});
  REQUIRE(s.size() == 2);
  CHECK(s[0].sentence_id == 0);
  CHECK(s[1].sentence_id == 1);
  CHECK(s[0].size() == 3);
  CHECK(s[0].tokens[1].head == std::optional<std::size_t>(2));
  REQUIRE(s[1].size() == 2);
  CHECK(s[1].tokens[0].form == "do");
}

TEST_CASE("parse_conll errors") {
  SUBCASE("head beyond the sentence is a structural error naming the sentence") {
    try {
      parse("a\t0\tROOT\n\nThe\t9\tNMOD\ncat\t0\tROOT\n");
      FAIL("expected StructuralError");
    } catch (const StructuralError& e) {
      CHECK(e.sentence_id() == 1);
    }
  }
  SUBCASE("too few columns reports the line") {
    try {
      parse("The\t2\tNMOD\ncat\t0\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("inconsistent column count within a sentence") {
    CHECK_THROWS_AS(parse("The\t2\tNMOD\ncat\t0\tROOT\textra\n"), ParseError);
  }
  SUBCASE("non-numeric head") { CHECK_THROWS_AS(parse("The\tx\tNMOD\n"), ParseError); }
}

TEST_CASE("filter_sentences keeps min < K < max in order") {
  std::vector<RawSentence> in;
  for (std::size_t k : {3, 4, 5, 39, 40}) in.push_back(sentence_of_length(k, k));
  const auto out = filter_sentences(in, 4, 40);
  REQUIRE(out.size() == 2);
  CHECK(out[0].size() == 5);
  CHECK(out[1].size() == 39);

  CHECK(filter_sentences(in, 0).size() == in.size());
  CHECK(filter_sentences({}, 4, 40).empty());
  CHECK_THROWS_AS(filter_sentences(in, 10, 5), ConfigError);
}

TEST_CASE("build_vocabulary applies the frequency threshold") {
  RawSentence s;
  auto add = [&](const std::string& w, int n) {
    for (int i = 0; i < n; ++i) s.tokens.push_back({w, std::nullopt, "x"});
  };
  add("c", 39);
  add("b", 40);
  add("a", 50);
  const auto v = Vocabulary::build({s}, 40);
  CHECK(v.size() == 3);
  CHECK(v.lookup("a") == 0);
  CHECK(v.lookup("b") == 1);
  CHECK(v.lookup("c") == v.oov_id());
  CHECK(v.word(v.oov_id()) == "<unk>");

  SUBCASE("min-count 1 retains every form") {
    const auto all = Vocabulary::build({s}, 1);
    CHECK(all.size() == 4);
    CHECK(all.lookup("c") == 2);
  }
  SUBCASE("ties break lexicographically") {
    RawSentence t;
    for (const char* w : {"zeta", "alpha", "mid"}) t.tokens.push_back({w, std::nullopt, "x"});
    const auto tv = Vocabulary::build({t}, 1);
    CHECK(tv.words() == std::vector<std::string>{"alpha", "mid", "zeta", "<unk>"});
  }
}

TEST_CASE("vocabulary of one repeated form") {
  RawSentence s;
  for (int i = 0; i < 3; ++i) s.tokens.push_back({"the", std::nullopt, "x"});
  const auto v = Vocabulary::build({s}, 2);
  CHECK(v.words() == std::vector<std::string>{"the", "<unk>"});
  CHECK_THROWS_AS(Vocabulary::build({s}, 0), ConfigError);
}

TEST_CASE("build_synfunc_inventory keeps the top-k non-excluded labels") {
  RawSentence s;
  auto add = [&](const std::string& l, int n) {
    for (int i = 0; i < n; ++i) s.tokens.push_back({"w", std::nullopt, l});
  };
  add("nmod", 100);
  add("pmod", 80);
  add("sub", 60);
  add("det", 200);
  add("loc", 10);

  const auto inv = SynFuncInventory::build({s}, 3, {"det"});
  CHECK(inv.size() == 4);
  CHECK(inv.labels() == std::vector<std::string>{"nmod", "pmod", "sub"});
  CHECK(inv.lookup("det") == inv.other_id());
  CHECK(inv.lookup("loc") == inv.other_id());
  CHECK(inv.lookup("sub") == 2);

  const auto none = SynFuncInventory::build({s}, 0, {"det"});
  CHECK(none.size() == 1);
  CHECK(none.lookup("nmod") == none.other_id());

  const auto wide = SynFuncInventory::build({s}, 10, {"DET"});
  CHECK(wide.size() == 5);  // nmod pmod sub loc + other
  CHECK(wide.lookup("det") == wide.other_id());
}

TEST_CASE("encode_tree") {
  const auto raw = parse("The\t2\tNMOD\ncat\t0\tROOT\nsat\t2\tVC\n");
  const auto vocab = Vocabulary::build(raw, 1);
  const auto inv = SynFuncInventory::build(raw, 1, {});  // ties: NMOD < ROOT < VC

  SUBCASE("tree mode copies heads and resolves functions") {
    const auto t = encode_tree(raw[0], vocab, inv, Topology::tree);
    CHECK(t.node(1).parent == 2);
    CHECK(t.node(1).func == inv.lookup("NMOD"));
    CHECK(t.node(1).func == 0);
    CHECK(t.node(2).parent == 0);
    CHECK(t.node(2).func == inv.other_id());
    CHECK(t.node(3).parent == 2);
  }
  SUBCASE("chain mode") {
    const auto t = encode_tree(raw[0], vocab, inv, Topology::chain);
    for (std::size_t k = 1; k <= 3; ++k) {
      CHECK(t.node(k).parent == k - 1);
      CHECK(t.node(k).func == inv.other_id());
    }
  }
  SUBCASE("unseen word maps to the OOV id") {
    const auto other = parse("dog\t0\tROOT\n");
    CHECK(encode_tree(other[0], vocab, inv).node(1).word == vocab.oov_id());
  }
  SUBCASE("multiple roots and cycles are structural errors") {
    CHECK_THROWS_AS(encode_tree(parse("a\t0\tX\nb\t0\tX\n")[0], vocab, inv), StructuralError);
    CHECK_THROWS_AS(encode_tree(parse("a\t2\tX\nb\t1\tX\nc\t0\tX\n")[0], vocab, inv),
                    StructuralError);
    CHECK_THROWS_AS(encode_tree(parse("a\t2\tX\nb\t1\tX\nc\t0\tX\n")[0], vocab, inv,
                                Topology::chain),
                    StructuralError);
  }
}

TEST_CASE("DepTree rejects malformed parents") {
  CHECK_THROWS_AS(DepTree({{0, 0, 1}}), StructuralError);       // self loop
  CHECK_THROWS_AS(DepTree({{0, 0, 0}, {0, 0, 5}}), StructuralError);
  CHECK_THROWS_AS(DepTree({{0, 0, 2}, {0, 0, 1}}), StructuralError);
  const DepTree t({{0, 0, 0}, {1, 0, 1}, {2, 0, 1}});
  CHECK(t.children(1).size() == 2);
  CHECK(t.children(0).size() == 1);
}

TEST_CASE("encoding properties over random sentences") {
  auto gen = rng_stream(7, "corpus-props");
  for (int trial = 0; trial < 200; ++trial) {
    const auto k_max = 1 + uniform_index(gen, 12);
    const auto shape = synthetic::random_tree(k_max, 6, 3, gen);
    RawSentence s;
    s.sentence_id = static_cast<std::size_t>(trial);
    for (std::size_t k = 1; k <= k_max; ++k) {
      const auto& nd = shape.node(k);
      s.tokens.push_back({"w" + std::to_string(nd.word),
                          nd.parent == 0 ? std::nullopt : std::optional<std::size_t>(nd.parent - 1),
                          "L" + std::to_string(nd.func)});
    }
    const auto vocab = Vocabulary::build({s}, 1 + uniform_index(gen, 2));
    const auto inv = SynFuncInventory::build({s}, uniform_index(gen, 3), {});
    const auto tree = encode_tree(s, vocab, inv, Topology::tree);
    const auto chain = encode_tree(s, vocab, inv, Topology::chain);

    // Every node visited exactly once from the root.
    auto order = std::vector<std::uint32_t>(tree.topological_order().begin(),
                                            tree.topological_order().end());
    std::sort(order.begin(), order.end());
    for (std::size_t k = 1; k <= k_max; ++k) CHECK(order[k - 1] == k);

    CHECK(encode_tree(s, vocab, inv, Topology::tree) == tree);

    std::vector<WordId> a, b;
    for (const auto& nd : tree.nodes()) a.push_back(nd.word);
    for (const auto& nd : chain.nodes()) b.push_back(nd.word);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);

    for (const auto& nd : tree.nodes())
      if (nd.word != vocab.oov_id()) CHECK(vocab.lookup(vocab.word(nd.word)) == nd.word);
  }
}
