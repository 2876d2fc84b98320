#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli/cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "thmm/serialization.hpp"

using namespace thmm;
namespace fs = std::filesystem;

namespace {

const std::string kSample = std::string(THMM_DATA_DIR) + "/sample.conll";
const std::string kBrown = std::string(THMM_DATA_DIR) + "/sample.brown";

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "thmm_test_cli";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json sidecar(const fs::path& model) { return nlohmann::json::parse(slurp(model.string() + ".json")); }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> v;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

std::size_t sample_tokens() {
  std::size_t n = 0;
  for (const auto& l : lines(slurp(kSample))) n += !l.empty() && l[0] != '#';
  return n;
}

// A small, fast training run on the sample corpus.
std::vector<std::string> small_train(const fs::path& model, std::vector<std::string> extra = {}) {
  std::vector<std::string> args{"train", "--corpus", kSample, "--model-out", model.string(),
                                "--states", "8", "--log-level", "warn"};
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

}  // namespace

TEST_CASE("train with default flags on the sample corpus") {
  const auto model = scratch("default.bin");
  const auto r = run({"train", "--corpus", kSample, "--model-out", model.string(), "--log-level", "warn"});
  REQUIRE(r.code == 0);
  const auto m = load_model(model);
  CHECK(m.meta.states == 128);
  CHECK(validate(m).ok());
  const auto side = sidecar(model);
  CHECK(side["train"]["keep_k"] == 16);
  CHECK(side["train"]["em"] == "stepwise");
  CHECK(side["corpus"]["min_count"] == 40);
  CHECK(side["functions"]["labels"].size() == 5);
  CHECK(m.meta.functions == 6);
  CHECK(m.meta.vocab == side["vocabulary"]["words"].size());
  // The resolved configuration is echoed as one JSON line.
  const auto first = lines(r.err).front();
  CHECK(nlohmann::json::parse(first)["train"]["states"] == 128);
}

TEST_CASE("baseline and projection settings") {
  SUBCASE("chain mode is a plain HMM") {
    const auto model = scratch("chain.bin");
    REQUIRE(run(small_train(model, {"--mode", "chain"})).code == 0);
    CHECK(load_model(model).meta.functions == 1);
    CHECK(sidecar(model)["corpus"]["topology"] == "chain");
  }
  SUBCASE("topk-funcs 0 is the unlabeled tree model") {
    const auto model = scratch("tree.bin");
    REQUIRE(run(small_train(model, {"--topk-funcs", "0"})).code == 0);
    CHECK(load_model(model).meta.functions == 1);
  }
  SUBCASE("keep-k 16 with 128 states") {
    const auto model = scratch("keep16.bin");
    REQUIRE(run({"train", "--corpus", kSample, "--model-out", model.string(), "--states", "128",
                 "--keep-k", "16", "--epochs", "1", "--log-level", "warn"})
                .code == 0);
    CHECK(sidecar(model)["train"]["keep_k"] == 16);
  }
  SUBCASE("batch EM, Brown initialization and a split schedule") {
    const auto model = scratch("brown.bin");
    for (const auto* f : {"1", "10", "100", "1000", "10000"})
      REQUIRE(run(small_train(model, {"--clusters", kBrown, "--brown-prefix", "3", "--brown-factor", f,
                                      "--em", "batch", "--epochs", "2"}))
                  .code == 0);
    REQUIRE(run(small_train(model, {"--schedule", "1s,1", "--no-projection"})).code == 0);
    CHECK(load_model(model).meta.states == 16);
  }
}

TEST_CASE("configuration errors exit 1") {
  const auto model = scratch("bad.bin");
  CHECK(run(small_train(model, {"--keep-k", "9"})).code == 1);
  CHECK(run(small_train(model, {"--alpha", "0.3"})).code == 1);
  CHECK(run(small_train(model, {"--em", "gibbs"})).code == 1);
  CHECK(run(small_train(model, {"--min-len", "50"})).code == 1);
  CHECK(run(small_train(model, {"--schedule", "2x"})).code == 1);
  CHECK(run(small_train(model, {"--clusters", kBrown})).code == 1);  // 63 clusters > 8 states
  CHECK(run({"train", "--corpus", kSample}).code == 1);
  CHECK(run({}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("input errors exit 2") {
  const auto model = scratch("io.bin");
  CHECK(run(small_train(model, {"--corpus", "/nonexistent/corpus.conll"})).code == 2);
  const auto broken = scratch("broken.conll");
  std::ofstream(broken) << "1\tdog\t_\t_\t_\t_\tx\tSBJ\t_\t_\n\n";
  CHECK(run(small_train(model, {"--corpus", broken.string()})).code == 2);
  const auto cyclic = scratch("cyclic.conll");
  std::ofstream(cyclic) << "1\ta\t_\t_\t_\t_\t2\tX\t_\t_\n2\tb\t_\t_\t_\t_\t1\tX\t_\t_\n\n";
  CHECK(run(small_train(model, {"--corpus", cyclic.string(), "--min-len", "0"})).code == 2);
  CHECK(run({"inspect", "--model", scratch("missing.bin").string()}).code == 2);
}

TEST_CASE("embed and decode") {
  const auto model = scratch("embed.bin");
  REQUIRE(run(small_train(model)).code == 0);
  const auto vocab = sidecar(model)["vocabulary"]["words"].size();
  const std::size_t tokens = sample_tokens();

  SUBCASE("post-type writes one row per observed type") {
    const auto r = run({"embed", "--model", model.string(), "--corpus", kSample, "--log-level", "warn"});
    REQUIRE(r.code == 0);
    const auto rows = lines(r.out);
    CHECK(rows.front() == std::to_string(vocab) + " 8");  // every word and <unk> occur
    CHECK(rows.size() == vocab + 1);
    const auto tsv = run({"embed", "--model", model.string(), "--corpus", kSample, "--format", "tsv",
                          "--out", scratch("types.tsv").string()});
    REQUIRE(tsv.code == 0);
    CHECK(lines(slurp(scratch("types.tsv"))).size() == vocab);
  }
  SUBCASE("post-token writes one row per token") {
    const auto r = run({"embed", "--model", model.string(), "--corpus", kSample, "--method", "post-token"});
    REQUIRE(r.code == 0);
    const auto rows = lines(r.out);
    CHECK(rows.size() == tokens);
    CHECK(rows.front().rfind("0 1 ", 0) == 0);  // sentence ordinal, token index
  }
  SUBCASE("max-product appends a state column") {
    const auto r = run({"decode", "--model", model.string(), "--corpus", kSample});
    REQUIRE(r.code == 0);
    const auto e = run({"embed", "--model", model.string(), "--corpus", kSample, "--method", "max-product"});
    CHECK(e.out == r.out);
    std::size_t labeled = 0;
    for (const auto& l : lines(r.out)) {
      if (l.empty()) continue;
      ++labeled;
      CHECK(std::count(l.begin(), l.end(), '\t') == 10);
    }
    CHECK(labeled == tokens);
  }
  SUBCASE("projection during extraction") {
    CHECK(run({"embed", "--model", model.string(), "--corpus", kSample, "--project"}).code == 0);
  }
  SUBCASE("unknown method prints usage and exits 1") {
    const auto r = run({"embed", "--model", model.string(), "--corpus", kSample, "--method", "mean"});
    CHECK(r.code == 1);
    CHECK(r.err.find("Usage") != std::string::npos);
  }
}

TEST_CASE("inspect") {
  Model p(ModelMeta{128, 3, 1, 0});
  p.transition[0].setConstant(1.0 / 128);
  p.emission[0].setConstant(1.0 / 3);
  p.root.setConstant(1.0 / 128);
  const auto path = scratch("uniform.bin");
  save_model(path, p);
  fs::remove(path.string() + ".json");
  const auto r = run({"inspect", "--model", path.string(), "--top", "2"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("transition entropy (column mean) 7.000000 bits") != std::string::npos);
  CHECK(r.out.find("transition parameters 16512") != std::string::npos);
  CHECK(r.out.find("emission parameters 384") != std::string::npos);
  CHECK(r.out.find("validate ok") != std::string::npos);
  CHECK(r.out.find("state 0 function 0: 0 0.3333 1 0.3333") != std::string::npos);

  const auto trained = scratch("inspect-trained.bin");
  REQUIRE(run(small_train(trained)).code == 0);
  const auto t = run({"inspect", "--model", trained.string()});
  CHECK(t.out.find("function SBJ:") != std::string::npos);
}

TEST_CASE("config files and reruns") {
  const auto cfg = scratch("run.cfg");
  std::ofstream(cfg) << "# experiment\nstates = 4\nepochs=1\nseed = 7\n";
  const auto model = scratch("cfg.bin");
  REQUIRE(run({"train", "--config", cfg.string(), "--corpus", kSample, "--model-out", model.string(),
               "--states", "6", "--log-level", "warn"})
              .code == 0);
  const auto side = sidecar(model);
  CHECK(side["meta"]["states"] == 6);  // command line wins
  CHECK(side["train"]["epochs"] == 1);
  CHECK(side["train"]["seed"] == 7);

  std::ofstream(scratch("bad.cfg")) << "states\n";
  CHECK(run({"train", "--config", scratch("bad.cfg").string(), "--corpus", kSample, "--model-out",
             model.string()})
            .code == 1);

  SUBCASE("identical config and seed give byte-identical files for any thread count") {
    const auto a = scratch("rerun-a.bin"), b = scratch("rerun-b.bin");
    REQUIRE(run(small_train(a, {"--threads", "1"})).code == 0);
    REQUIRE(run(small_train(b, {"--threads", "3"})).code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a.string() + ".json") == slurp(b.string() + ".json"));
  }
  SUBCASE("checkpoint and resume") {
    const auto ck = scratch("ck.bin"), full = scratch("full.bin"), resumed = scratch("resumed.bin");
    REQUIRE(run(small_train(full, {"--epochs", "2"})).code == 0);
    REQUIRE(run(small_train(scratch("half.bin"), {"--epochs", "1", "--checkpoint", ck.string()})).code == 0);
    REQUIRE(run(small_train(resumed, {"--epochs", "2", "--resume", ck.string()})).code == 0);
    CHECK(slurp(full) == slurp(resumed));
  }
}

TEST_CASE("schedule parsing") {
  const auto s = cli::parse_schedule("2s,2s,2");
  REQUIRE(s.size() == 3);
  CHECK(s[0].epochs == 2);
  CHECK(s[0].split_after);
  CHECK_FALSE(s[2].split_after);
  CHECK_THROWS_AS(cli::parse_schedule(""), ConfigError);
  CHECK_THROWS_AS(cli::parse_schedule("s"), ConfigError);
}
