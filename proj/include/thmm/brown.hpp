#ifndef THMM_BROWN_HPP
#define THMM_BROWN_HPP

#include <iosfwd>

#include "thmm/corpus.hpp"
#include "thmm/model.hpp"

namespace thmm {

/// Reads Liang-format cluster output ("bitpath<TAB>word<TAB>count" lines).
/// Bit paths truncated to `prefix_length` characters (0 = whole path) define
/// the clusters; cluster ids follow the lexicographic order of the distinct
/// prefixes that contain at least one vocabulary word. Words outside the
/// vocabulary are ignored; the OOV id is never mapped.
BrownClusterMap read_brown_clusters(std::istream& in, const Vocabulary& vocab,
                                    std::size_t prefix_length = 0);

}  // namespace thmm

#endif  // THMM_BROWN_HPP
