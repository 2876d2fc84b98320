#include "thmm/brown.hpp"

#include <istream>
#include <map>
#include <sstream>
#include <string>

#include "thmm/errors.hpp"

namespace thmm {

BrownClusterMap read_brown_clusters(std::istream& in, const Vocabulary& vocab,
                                    std::size_t prefix_length) {
  std::map<std::string, std::vector<WordId>> members;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos || t1 == 0)
      throw ParseError(line_no, "expected bitpath<TAB>word<TAB>count");
    auto path = line.substr(0, t1);
    const auto word = line.substr(t1 + 1, t2 - t1 - 1);
    if (path.find_first_not_of("01") != std::string::npos)
      throw ParseError(line_no, "bit path '" + path + "' is not binary");
    if (prefix_length > 0 && path.size() > prefix_length) path.resize(prefix_length);
    const auto id = vocab.lookup(word);
    if (id == vocab.oov_id()) continue;
    members[path].push_back(id);
  }

  BrownClusterMap map;
  map.cluster_of.assign(vocab.size(), -1);
  for (const auto& [path, words] : members) {
    for (const auto w : words) map.cluster_of[w] = static_cast<std::int32_t>(map.count);
    ++map.count;
  }
  return map;
}

}  // namespace thmm
