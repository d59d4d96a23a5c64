#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace embeff {

struct WeightTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

void validate_tensor(const WeightTensor& w);

enum class PruneScope { PerTensor, Global };

struct PruneSpec {
  double ratio = 0.0;  // in [0, 1)
  PruneScope scope = PruneScope::PerTensor;
};

struct QuantSpec {
  int bits = 8;  // in [2, 16]
};

/// H timesteps by k action dimensions.
struct ActionChunk {
  std::size_t H = 0;
  std::size_t k = 0;
  std::vector<double> values;  // row-major, H rows of k
  double f = 0.0;

  double& at(std::size_t t, std::size_t j) { return values[t * k + j]; }
  double at(std::size_t t, std::size_t j) const { return values[t * k + j]; }
};

struct TokenSet {
  std::size_t n = 0;
  std::size_t e = 0;
  std::vector<double> embeddings;  // row-major, n rows of e
  std::vector<double> scores;      // optional; empty = use scorer
};

// Zeroes the floor(ratio * n) smallest-magnitude entries; ties at the
// threshold prune the lower flat index first. Returns a keep-mask per entry.
std::vector<WeightTensor> magnitude_prune(const std::vector<WeightTensor>& ws,
                                          const PruneSpec& spec,
                                          std::vector<std::vector<bool>>* masks = nullptr);
WeightTensor magnitude_prune(const WeightTensor& w, const PruneSpec& spec,
                             std::vector<bool>* mask = nullptr);

// Symmetric per-tensor quantize-dequantize with round-half-away-from-zero.
// All-zero tensors pass through unchanged (scale undefined).
WeightTensor fake_quantize(const WeightTensor& w, const QuantSpec& spec);

// Keeps the ceil((1 - ratio) * n) highest-scoring tokens in original order;
// equal scores keep the earlier index. Default scorer: embedding L2 norm.
using TokenScorer = std::function<double(const double* embedding, std::size_t e)>;
TokenSet token_prune(const TokenSet& tokens, double ratio,
                     std::vector<std::size_t>* kept_indices = nullptr,
                     const TokenScorer& scorer = nullptr);

// Orthonormal DCT-II and its inverse.
std::vector<double> dct_forward(const std::vector<double>& x);
std::vector<double> dct_inverse(const std::vector<double>& c);

/// Per action dimension: `keep` lowest-frequency DCT coefficients quantized
/// to integer multiples of q_step.
struct CompressedChunk {
  std::size_t H = 0;
  std::size_t k = 0;
  std::size_t keep = 0;
  double q_step = 0.0;
  double f = 0.0;
  std::vector<std::int64_t> coeffs;  // k rows of `keep`
};

CompressedChunk compress_action_chunk(const ActionChunk& chunk, double q_step,
                                      std::size_t keep);
ActionChunk reconstruct_action_chunk(const CompressedChunk& repr);

// Little-endian binary serialization of the compressed representation.
std::vector<std::uint8_t> serialize_compressed_chunk(const CompressedChunk& c);
CompressedChunk deserialize_compressed_chunk(const std::vector<std::uint8_t>& bytes);

double round_half_away(double x);

}  // namespace embeff
