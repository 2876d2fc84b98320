#ifndef THMM_CLI_HPP
#define THMM_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "thmm/corpus.hpp"
#include "thmm/training.hpp"

namespace thmm::cli {

enum ExitCode : int { kOk = 0, kConfig = 1, kIo = 2, kNumerical = 3 };

struct CorpusOptions {
  ColumnMap columns;
  std::size_t min_len = 4;
  std::size_t max_len = 40;
  std::size_t min_count = 40;
  std::size_t topk_funcs = 5;
  std::vector<std::string> exclusions{"p", "punct", "det"};
  std::string topology = "tree";
};

struct RunConfig {
  std::string subcommand;
  CorpusOptions corpus;
  std::size_t states = 128;
  TrainConfig train;
  std::string em = "stepwise";
  std::size_t keep_k = 0;        // 0 = N/8
  bool no_projection = false;
  std::string schedule;          // e.g. "2s,2s,2": epochs per round, 's' = split after
  double brown_factor = 1000;
  std::size_t brown_prefix = 0;
  std::string corpus_path, clusters_path, model_in, model_out, out_path = "-";
  std::string checkpoint_path, resume_path;
  std::string method = "post-type";
  std::string format = "text-vec";
  bool project_extraction = false;
  std::size_t top = 5;
  std::string log_level = "info";
  std::size_t threads = 1;

  nlohmann::json to_json() const;
};

/// Parses "2s,2s,2" into split rounds.
std::vector<SplitRound> parse_schedule(const std::string& text);

/// Flat "key=value" lines; '#' starts a comment. Keys are long option names
/// without the leading dashes.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

/// Entry point behind the `thmm` binary. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace thmm::cli

#endif  // THMM_CLI_HPP
