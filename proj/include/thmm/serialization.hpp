#ifndef THMM_SERIALIZATION_HPP
#define THMM_SERIALIZATION_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "thmm/model.hpp"
#include "thmm/training.hpp"

namespace thmm {

// Binary container, little-endian throughout:
//   "THMM" | u32 version | u64 N, V, S, seed
//   | transition (function, parent, child) | emission (function, state, word)
//   | root (function, state)                              -- f64 each
// A checkpoint appends a trainer block:
//   "TRST" | u64 updates, epoch, shuffle_seed, tree_count | statistics in
//   the same tensor order as the parameters.
inline constexpr std::uint32_t kFormatVersion = 1;

void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

struct Checkpoint {
  Model model;
  std::optional<StepwiseState<double>> state;
};

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const StepwiseState<double>& state);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace thmm

#endif  // THMM_SERIALIZATION_HPP
