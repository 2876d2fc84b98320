#include "thmm/serialization.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace thmm {

namespace {

constexpr std::array<char, 4> kMagic{'T', 'H', 'M', 'M'};
constexpr std::array<char, 4> kStateMagic{'T', 'R', 'S', 'T'};
constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 32;

void put_u64(std::ostream& out, std::uint64_t x) {
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((x >> (8 * i)) & 0xff);
  out.write(b.data(), 8);
}

void put_u32(std::ostream& out, std::uint32_t x) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((x >> (8 * i)) & 0xff);
  out.write(b.data(), 4);
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b;
  if (!in.read(reinterpret_cast<char*>(b.data()), 8)) throw IoError("truncated model file");
  std::uint64_t x = 0;
  for (int i = 7; i >= 0; --i) x = (x << 8) | b[i];
  return x;
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b;
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw IoError("truncated model file");
  std::uint32_t x = 0;
  for (int i = 3; i >= 0; --i) x = (x << 8) | b[i];
  return x;
}

void put_matrix(std::ostream& out, const Matrix<double>& m) {
  // Column-major order is exactly the declared storage order.
  for (Eigen::Index i = 0; i < m.size(); ++i) put_u64(out, std::bit_cast<std::uint64_t>(m.data()[i]));
}

void get_matrix(std::istream& in, Matrix<double>& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std::bit_cast<double>(get_u64(in));
}

void put_tensors(std::ostream& out, const std::vector<Matrix<double>>& transition,
                 const std::vector<Matrix<double>>& emission, const Matrix<double>& root) {
  for (const auto& t : transition) put_matrix(out, t);
  for (const auto& o : emission) put_matrix(out, o);
  put_matrix(out, root);
}

void get_tensors(std::istream& in, std::vector<Matrix<double>>& transition,
                 std::vector<Matrix<double>>& emission, Matrix<double>& root) {
  for (auto& t : transition) get_matrix(in, t);
  for (auto& o : emission) get_matrix(in, o);
  get_matrix(in, root);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

void write_model(std::ostream& out, const Model& model) {
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kFormatVersion);
  put_u64(out, model.meta.states);
  put_u64(out, model.meta.vocab);
  put_u64(out, model.meta.functions);
  put_u64(out, model.meta.seed);
  put_tensors(out, model.transition, model.emission, model.root);
  if (!out) throw IoError("failed writing model");
}

Model read_model(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw IoError("not a model file (bad magic)");
  const auto version = get_u32(in);
  if (version != kFormatVersion)
    throw IoError("unsupported model format version " + std::to_string(version));
  ModelMeta meta;
  meta.states = get_u64(in);
  meta.vocab = get_u64(in);
  meta.functions = get_u64(in);
  meta.seed = get_u64(in);
  if (meta.states == 0 || meta.states > kMaxDim || meta.vocab > kMaxDim ||
      meta.functions == 0 || meta.functions > kMaxDim)
    throw IoError("model header has implausible dimensions");
  Model model(meta);
  get_tensors(in, model.transition, model.emission, model.root);
  if (const auto report = validate(model); !report.ok())
    throw IoError("model file holds invalid parameters: " + report.to_string());
  return model;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  auto out = open_out(path);
  write_model(out, model);
}

Model load_model(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_model(in);
}

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const StepwiseState<double>& state) {
  auto out = open_out(path);
  write_model(out, model);
  out.write(kStateMagic.data(), kStateMagic.size());
  put_u64(out, state.updates);
  put_u64(out, state.epoch);
  put_u64(out, state.shuffle_seed);
  put_u64(out, state.mu.tree_count);
  put_tensors(out, state.mu.transition, state.mu.emission, state.mu.root);
  if (!out) throw IoError("failed writing checkpoint");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto in = open_in(path);
  Checkpoint cp{read_model(in), std::nullopt};
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size())) return cp;
  if (magic != kStateMagic) throw IoError("unknown block after model parameters");
  StepwiseState<double> state;
  state.updates = get_u64(in);
  state.epoch = get_u64(in);
  state.shuffle_seed = get_u64(in);
  state.mu = SufficientStats<double>(cp.model.meta);
  state.mu.tree_count = get_u64(in);
  get_tensors(in, state.mu.transition, state.mu.emission, state.mu.root);
  cp.state = std::move(state);
  return cp;
}

}  // namespace thmm
