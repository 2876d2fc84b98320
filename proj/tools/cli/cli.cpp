#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "thmm/brown.hpp"
#include "thmm/log.hpp"
#include "thmm/model.hpp"
#include "thmm/representations.hpp"
#include "thmm/serialization.hpp"
#include "thmm/training.hpp"

namespace thmm::cli {

namespace {

using nlohmann::json;

std::string sidecar_path(const std::string& model_path) { return model_path + ".json"; }

std::size_t resolved_keep_k(const RunConfig& c) {
  return c.keep_k > 0 ? c.keep_k : std::max<std::size_t>(1, c.states / 8);
}

std::ifstream open_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

std::vector<RawSentence> read_corpus(const std::string& path, const ColumnMap& columns) {
  auto in = open_text(path);
  return parse_conll(in, columns);
}

// Writes to a file, or standard output for "-".
template <typename Fn>
void with_output(const std::string& path, std::ostream& stdout_stream, Fn&& fn) {
  if (path == "-") {
    fn(stdout_stream);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  fn(out);
  if (!out) throw IoError("failed writing '" + path + "'");
}

json corpus_json(const CorpusOptions& c) {
  return {{"columns",
           {{"id", c.columns.id}, {"form", c.columns.form}, {"head", c.columns.head},
            {"deprel", c.columns.deprel}}},
          {"min_len", c.min_len},
          {"max_len", c.max_len},
          {"min_count", c.min_count},
          {"topk_funcs", c.topk_funcs},
          {"exclusions", c.exclusions},
          {"topology", c.topology}};
}

json train_json(const RunConfig& c) {
  const auto& t = c.train;
  return {{"em", c.em},
          {"alpha", t.alpha},
          {"batch_size", t.minibatch_size},
          {"epochs", t.epochs},
          {"projection", !c.no_projection},
          {"keep_k", resolved_keep_k(c)},
          {"smoothing", t.smoothing},
          {"heldout", t.heldout_fraction},
          {"step_offset", t.step_offset},
          {"tolerance", t.tolerance},
          {"schedule", c.schedule},
          {"split_noise", t.split_noise},
          {"seed", t.seed},
          {"states", c.states},
          {"brown_factor", c.brown_factor},
          {"brown_prefix", c.brown_prefix},
          {"brown_init", !c.clusters_path.empty()}};
}

struct Sidecar {
  Vocabulary vocab;
  SynFuncInventory inventory;
  ColumnMap columns;
  Topology topology = Topology::tree;
};

void write_sidecar(const std::string& path, const RunConfig& c, const Model& model,
                   const Vocabulary& vocab, const SynFuncInventory& inv) {
  json j;
  j["format"] = "thmm-sidecar";
  j["version"] = kFormatVersion;
  j["meta"] = {{"states", model.meta.states},
               {"vocab", model.meta.vocab},
               {"functions", model.meta.functions},
               {"seed", model.meta.seed}};
  j["corpus"] = corpus_json(c.corpus);
  j["train"] = train_json(c);
  j["vocabulary"] = {{"min_count", vocab.min_count()}, {"words", vocab.words()}};
  j["functions"] = {{"labels", inv.labels()},
                    {"exclusions", std::vector<std::string>(inv.exclusions().begin(),
                                                            inv.exclusions().end())}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

Sidecar read_sidecar(const std::string& path) {
  auto in = open_text(path);
  json j;
  try {
    in >> j;
    Sidecar s;
    s.vocab = Vocabulary::from_words(j.at("vocabulary").at("words").get<std::vector<std::string>>(),
                                     j.at("vocabulary").at("min_count").get<std::size_t>());
    const auto excl = j.at("functions").at("exclusions").get<std::vector<std::string>>();
    s.inventory = SynFuncInventory::from_labels(
        j.at("functions").at("labels").get<std::vector<std::string>>(),
        std::set<std::string>(excl.begin(), excl.end()));
    const auto& cols = j.at("corpus").at("columns");
    s.columns.id = cols.at("id").get<std::size_t>();
    s.columns.form = cols.at("form").get<std::size_t>();
    s.columns.head = cols.at("head").get<std::size_t>();
    s.columns.deprel = cols.at("deprel").get<std::size_t>();
    s.topology = parse_topology(j.at("corpus").at("topology").get<std::string>());
    return s;
  } catch (const json::exception& e) {
    throw IoError("malformed sidecar '" + path + "': " + e.what());
  }
}

int cmd_train(const RunConfig& c) {
  auto sentences = read_corpus(c.corpus_path, c.corpus.columns);
  const auto read = sentences.size();
  sentences = filter_sentences(std::move(sentences), c.corpus.min_len, c.corpus.max_len);
  log::info("read " + std::to_string(read) + " sentences, kept " +
            std::to_string(sentences.size()) + " after length filtering");
  if (sentences.empty()) throw ConfigError("no sentences left to train on");

  const auto vocab = Vocabulary::build(sentences, c.corpus.min_count);
  const auto inventory = SynFuncInventory::build(
      sentences, c.corpus.topk_funcs,
      std::set<std::string>(c.corpus.exclusions.begin(), c.corpus.exclusions.end()));
  const auto trees = encode_corpus(sentences, vocab, inventory, parse_topology(c.corpus.topology));
  log::info("vocabulary " + std::to_string(vocab.size()) + ", functions " +
            std::to_string(inventory.size()));

  ModelMeta meta{c.states, vocab.size(), inventory.size(), c.train.seed};
  Model params0;
  if (!c.clusters_path.empty()) {
    auto in = open_text(c.clusters_path);
    const auto clusters = read_brown_clusters(in, vocab, c.brown_prefix);
    log::info(std::to_string(clusters.count) + " clusters for emission initialization");
    params0 = init_brown(meta, clusters, c.brown_factor);
  } else {
    params0 = init_random(meta);
  }

  auto cfg = c.train;
  const std::span<const DepTree> corpus(trees);
  Model trained;
  if (!c.schedule.empty()) {
    trained = train_with_splitting(corpus, params0, cfg, parse_schedule(c.schedule)).params;
  } else if (cfg.mode == EmMode::stepwise) {
    std::optional<StepwiseState<double>> resume;
    if (!c.resume_path.empty()) {
      auto cp = load_checkpoint(c.resume_path);
      if (!cp.state) throw IoError("'" + c.resume_path + "' holds no trainer state");
      log::info("resuming after epoch " + std::to_string(cp.state->epoch));
      params0 = std::move(cp.model);
      resume = std::move(cp.state);
    }
    EpochHook<double> hook;
    if (!c.checkpoint_path.empty())
      hook = [&](const Model& m, const StepwiseState<double>& s) {
        save_checkpoint(c.checkpoint_path, m, s);
      };
    trained = train_stepwise_em(corpus, params0, cfg, resume ? &*resume : nullptr, hook).params;
  } else {
    trained = train_batch_em(corpus, params0, cfg).params;
  }

  const auto report = validate(trained);
  if (!report.ok()) throw NumericalError("trained model failed validation: " + report.to_string());
  save_model(c.model_out, trained);
  write_sidecar(sidecar_path(c.model_out), c, trained, vocab, inventory);
  log::info("wrote " + c.model_out);
  return kOk;
}

struct LoadedModel {
  Model model;
  Sidecar sidecar;
};

LoadedModel load_with_sidecar(const std::string& path) {
  LoadedModel m{load_model(path), read_sidecar(sidecar_path(path))};
  if (m.sidecar.vocab.size() != m.model.meta.vocab ||
      m.sidecar.inventory.size() != m.model.meta.functions)
    throw IoError("sidecar does not match model dimensions");
  return m;
}

int cmd_embed(const RunConfig& c, std::ostream& out) {
  const auto lm = load_with_sidecar(c.model_in);
  auto columns = lm.sidecar.columns;
  columns.keep_lines = c.method == "max-product";
  const auto sentences = read_corpus(c.corpus_path, columns);
  const auto trees =
      encode_corpus(sentences, lm.sidecar.vocab, lm.sidecar.inventory, lm.sidecar.topology);
  if (trees.empty()) throw ConfigError("corpus is empty");
  const auto n = lm.model.meta.states;
  const ProjectionConfig proj =
      c.project_extraction
          ? ProjectionConfig::keep(c.keep_k > 0 ? c.keep_k : std::max<std::size_t>(1, n / 8))
          : ProjectionConfig::off();
  const std::span<const DepTree> corpus(trees);

  if (c.method == "post-type") {
    const auto table = post_type(corpus, lm.model, c.threads, proj);
    with_output(c.out_path, out, [&](std::ostream& o) {
      export_type_reps(table, lm.sidecar.vocab, parse_rep_format(c.format), o);
    });
  } else if (c.method == "post-token") {
    with_output(c.out_path, out, [&](std::ostream& o) {
      for (const auto& tree : trees) {
        const auto reps = post_token(tree, lm.model, proj);
        export_token_reps(reps, lm.sidecar.vocab, o);
      }
    });
  } else {
    const auto labels = decode_labels(corpus, lm.model, c.threads);
    with_output(c.out_path, out,
                [&](std::ostream& o) { write_labeled_conll(sentences, labels, o); });
  }
  return kOk;
}

int cmd_inspect(const RunConfig& c, std::ostream& out) {
  const auto model = load_model(c.model_in);
  std::optional<Sidecar> side;
  if (std::ifstream probe(sidecar_path(c.model_in)); probe) side = read_sidecar(sidecar_path(c.model_in));

  const auto counts = param_count(model.meta);
  out << "states " << model.meta.states << '\n'
      << "vocab " << model.meta.vocab << '\n'
      << "functions " << model.meta.functions << '\n'
      << "seed " << model.meta.seed << '\n'
      << "transition parameters " << counts.transitions << '\n'
      << "emission parameters " << counts.emissions << '\n';
  out << std::fixed << std::setprecision(6)
      << "transition entropy (column mean) "
      << transition_entropy(model, EntropyAggregation::column_mean) << " bits\n"
      << "transition entropy (flattened) "
      << transition_entropy(model, EntropyAggregation::flattened) << " bits\n";
  const auto report = validate(model);
  out << "validate " << report.to_string() << '\n';

  if (c.top == 0) return kOk;
  out << std::setprecision(4);
  for (std::size_t l = 0; l < model.meta.functions; ++l) {
    const std::string fname = side ? side->inventory.name(static_cast<FuncId>(l)) : std::to_string(l);
    const auto& o = model.emission[l];
    for (Eigen::Index j = 0; j < o.cols(); ++j) {
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(o.rows()));
      std::iota(idx.begin(), idx.end(), Eigen::Index{0});
      const auto top = std::min<std::size_t>(c.top, idx.size());
      std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(top), idx.end(),
                        [&](Eigen::Index a, Eigen::Index b) {
                          return o(a, j) > o(b, j) || (o(a, j) == o(b, j) && a < b);
                        });
      out << "state " << j << " function " << fname << ':';
      for (std::size_t r = 0; r < top; ++r) {
        const auto w = idx[r];
        out << ' ' << (side ? side->vocab.word(static_cast<WordId>(w)) : std::to_string(w)) << ' '
            << o(w, j);
      }
      out << '\n';
    }
  }
  return kOk;
}

std::size_t env_threads() {
  if (const char* env = std::getenv("THMM_THREADS")) {
    try {
      const auto n = std::stoul(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

// Config-file entries become "--key=value" tokens placed before the user's
// own arguments; options take their last value, so the command line wins.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::size_t sub = 0;
  while (sub < args.size() && args[sub].starts_with("-")) ++sub;
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(std::min(sub + 1, args.size())));
  for (const auto& [key, value] : read_config_file(path)) out.push_back("--" + key + "=" + value);
  if (sub + 1 < args.size()) out.insert(out.end(), args.begin() + static_cast<std::ptrdiff_t>(sub + 1), args.end());
  return out;
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  json j;
  j["subcommand"] = subcommand;
  j["corpus"] = corpus_json(corpus);
  j["train"] = train_json(*this);
  j["paths"] = {{"corpus", corpus_path}, {"clusters", clusters_path}, {"model_in", model_in},
                {"model_out", model_out}, {"out", out_path}, {"checkpoint", checkpoint_path},
                {"resume", resume_path}};
  j["embed"] = {{"method", method}, {"format", format}, {"project", project_extraction}};
  j["top"] = top;
  j["threads"] = threads;
  j["log_level"] = log_level;
  return j;
}

std::vector<SplitRound> parse_schedule(const std::string& text) {
  std::vector<SplitRound> rounds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    SplitRound r;
    if (!item.empty() && item.back() == 's') {
      r.split_after = true;
      item.pop_back();
    }
    try {
      std::size_t used = 0;
      r.epochs = std::stoul(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad schedule item '" + item + "' (expected e.g. 2s,2s,2)");
    }
    rounds.push_back(r);
  }
  if (rounds.empty()) throw ConfigError("schedule is empty");
  return rounds;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
    auto key = trim(line.substr(0, eq));
    if (key == "config") throw ConfigError("config files cannot include other config files");
    entries.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return entries;
}

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  c.threads = env_threads();

  CLI::App app{"Tree-structured HMM word representations conditioned on syntactic functions",
               "thmm"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::string config_path;

  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", config_path, "flat key=value file; command-line flags win");
    s->add_option("--threads", c.threads, "worker threads (env THMM_THREADS)")
        ->check(CLI::PositiveNumber);
    s->add_option("--log-level", c.log_level, "debug|info|warn|error|off")
        ->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}));
  };
  auto add_columns = [&](CLI::App* s) {
    s->add_option("--id-col", c.corpus.columns.id, "1-based CoNLL ID column");
    s->add_option("--form-col", c.corpus.columns.form, "1-based CoNLL FORM column");
    s->add_option("--head-col", c.corpus.columns.head, "1-based CoNLL HEAD column");
    s->add_option("--deprel-col", c.corpus.columns.deprel, "1-based CoNLL DEPREL column");
  };

  auto* train = app.add_subcommand("train", "build corpus, initialize and train a model");
  add_common(train);
  add_columns(train);
  train->add_option("--corpus", c.corpus_path, "CoNLL training corpus")->required();
  train->add_option("--model-out", c.model_out, "output model (sidecar at <path>.json)")
      ->required();
  train->add_option("--clusters", c.clusters_path, "Brown clusters for emission init");
  train->add_option("--brown-factor", c.brown_factor, "cluster boost factor f")
      ->check(CLI::Range(1.0, 1e12));
  train->add_option("--brown-prefix", c.brown_prefix, "bit-path prefix length (0 = full)");
  train->add_option("--states", c.states, "hidden states N")->check(CLI::PositiveNumber);
  train->add_option("--mode", c.corpus.topology, "tree|chain")
      ->check(CLI::IsMember({"tree", "chain"}));
  train->add_option("--topk-funcs", c.corpus.topk_funcs, "syntactic functions kept (0 = unlabeled)");
  std::string exclusions = "p,punct,det";
  train->add_option("--exclude-funcs", exclusions,
                    "comma-separated function-marker labels never kept");
  train->add_option("--min-count", c.corpus.min_count, "OOV frequency threshold")
      ->check(CLI::PositiveNumber);
  train->add_option("--min-len", c.corpus.min_len, "drop sentences with length <= this");
  train->add_option("--max-len", c.corpus.max_len, "drop sentences with length >= this");
  train->add_option("--em", c.em, "batch|stepwise")->check(CLI::IsMember({"batch", "stepwise"}));
  train->add_option("--alpha", c.train.alpha, "stepwise reduction power");
  train->add_option("--batch-size", c.train.minibatch_size, "stepwise mini-batch size");
  train->add_option("--step-offset", c.train.step_offset, "eta_t = (t + offset)^-alpha");
  train->add_option("--epochs", c.train.epochs, "passes over the corpus");
  train->add_option("--keep-k", c.keep_k, "k-best projection size (default N/8)");
  train->add_flag("--no-projection", c.no_projection, "exact E-steps");
  train->add_option("--smoothing", c.train.smoothing, "additive M-step smoothing");
  train->add_option("--heldout", c.train.heldout_fraction, "held-out fraction (stepwise)");
  train->add_option("--tolerance", c.train.tolerance, "batch: relative-gain stop (0 = off)");
  train->add_option("--schedule", c.schedule, "split schedule, e.g. 2s,2s,2");
  train->add_option("--split-noise", c.train.split_noise, "multiplicative split noise");
  train->add_option("--seed", c.train.seed, "master seed");
  train->add_option("--checkpoint", c.checkpoint_path, "stepwise: checkpoint after each epoch");
  train->add_option("--resume", c.resume_path, "stepwise: resume from a checkpoint");

  auto add_extract = [&](CLI::App* s, bool with_method) {
    add_common(s);
    s->add_option("--model", c.model_in, "model file (sidecar at <path>.json)")->required();
    s->add_option("--corpus", c.corpus_path, "CoNLL corpus")->required();
    s->add_option("--out", c.out_path, "output path ('-' = stdout)");
    if (with_method) {
      s->add_option("--method", c.method, "post-type|post-token|max-product")
          ->check(CLI::IsMember({"post-type", "post-token", "max-product"}));
      s->add_option("--format", c.format, "text-vec|tsv (post-type)")
          ->check(CLI::IsMember({"text-vec", "tsv"}));
      s->add_flag("--project", c.project_extraction, "k-best projection during extraction");
      s->add_option("--keep-k", c.keep_k, "projection size when --project is set");
    }
  };
  auto* embed = app.add_subcommand("embed", "extract word representations");
  add_extract(embed, true);
  auto* decode = app.add_subcommand("decode", "max-product state labels as an extra CoNLL column");
  add_extract(decode, false);

  auto* inspect = app.add_subcommand("inspect", "model diagnostics");
  add_common(inspect);
  inspect->add_option("--model", c.model_in, "model file")->required();
  inspect->add_option("--top", c.top, "top emissions per (state, function); 0 = none");

  try {
    auto args = expand_config(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kConfig;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfig;
  }

  try {
    log::set_level(log::parse_level(c.log_level));
    c.subcommand = app.get_subcommands().front()->get_name();
    c.corpus.exclusions.clear();
    {
      std::stringstream ss(exclusions);
      for (std::string label; std::getline(ss, label, ',');)
        if (!label.empty()) c.corpus.exclusions.push_back(label);
    }
    if (c.subcommand == "decode") c.method = "max-product";
    if (c.corpus.topology == "chain") c.corpus.topk_funcs = 0;  // a chain carries no labels
    c.train.mode = c.em == "batch" ? EmMode::batch : EmMode::stepwise;
    c.train.threads = c.threads;
    c.train.proj = c.no_projection ? ProjectionConfig::off()
                                   : ProjectionConfig::keep(resolved_keep_k(c));
    if (c.subcommand == "train" && c.keep_k > c.states) throw ConfigError("keep-k exceeds the number of states");
    if (c.corpus.min_len > c.corpus.max_len) throw ConfigError("min-len exceeds max-len");
    validate_config(c.train);
    if (!c.schedule.empty()) parse_schedule(c.schedule);
    if (!c.schedule.empty() && (!c.resume_path.empty() || !c.checkpoint_path.empty()))
      throw ConfigError("checkpoints are not supported with a split schedule");

    err << c.to_json().dump() << '\n';

    if (c.subcommand == "train") return cmd_train(c);
    if (c.subcommand == "embed" || c.subcommand == "decode") return cmd_embed(c, out);
    return cmd_inspect(c, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const Error& e) {  // I/O, parse and structural errors
    err << "input error: " << e.what() << '\n';
    return kIo;
  } catch (const std::bad_alloc&) {
    err << "out of memory\n";
    return kNumerical;
  }
}

}  // namespace thmm::cli
