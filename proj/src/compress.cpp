#include "embeff/compress.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>

#include "embeff/errors.hpp"

namespace embeff {

void validate_tensor(const WeightTensor& w) {
  std::size_t n = 1;
  for (std::size_t s : w.shape) n *= s;
  if (w.shape.empty() || n != w.values.size())
    throw ValidationError("tensor '" + w.name + "': shape product " +
                          std::to_string(n) + " != value count " +
                          std::to_string(w.values.size()));
  for (double v : w.values)
    if (!std::isfinite(v))
      throw ValidationError("tensor '" + w.name + "' has non-finite values");
}

double round_half_away(double x) { return std::round(x); }

namespace {

// Flat indices of the m smallest-magnitude entries; ties take the lower
// index first.
std::vector<std::size_t> smallest_indices(const std::vector<double>& vals,
                                          std::size_t m) {
  std::vector<std::size_t> idx(vals.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(vals[a]) < std::abs(vals[b]);
  });
  idx.resize(m);
  return idx;
}

}  // namespace

WeightTensor magnitude_prune(const WeightTensor& w, const PruneSpec& spec,
                             std::vector<bool>* mask) {
  std::vector<WeightTensor> ws{w};
  std::vector<std::vector<bool>> masks;
  auto out = magnitude_prune(ws, spec, mask ? &masks : nullptr);
  if (mask) *mask = std::move(masks.front());
  return std::move(out.front());
}

std::vector<WeightTensor> magnitude_prune(
    const std::vector<WeightTensor>& ws, const PruneSpec& spec,
    std::vector<std::vector<bool>>* masks) {
  if (!(spec.ratio >= 0.0 && spec.ratio < 1.0))
    throw ConfigError("prune ratio must be in [0, 1)");
  for (const auto& w : ws) validate_tensor(w);
  std::vector<WeightTensor> out = ws;
  if (masks) {
    masks->clear();
    for (const auto& w : ws) masks->emplace_back(w.size(), true);
  }
  auto zero = [&](std::size_t ti, std::size_t fi) {
    out[ti].values[fi] = 0.0;
    if (masks) (*masks)[ti][fi] = false;
  };
  if (spec.scope == PruneScope::PerTensor) {
    for (std::size_t ti = 0; ti < ws.size(); ++ti) {
      auto m = static_cast<std::size_t>(
          std::floor(spec.ratio * static_cast<double>(ws[ti].size())));
      for (std::size_t fi : smallest_indices(ws[ti].values, m)) zero(ti, fi);
    }
  } else {
    std::vector<double> pooled;
    std::vector<std::pair<std::size_t, std::size_t>> where;
    for (std::size_t ti = 0; ti < ws.size(); ++ti)
      for (std::size_t fi = 0; fi < ws[ti].size(); ++fi) {
        pooled.push_back(ws[ti].values[fi]);
        where.emplace_back(ti, fi);
      }
    auto m = static_cast<std::size_t>(
        std::floor(spec.ratio * static_cast<double>(pooled.size())));
    for (std::size_t pi : smallest_indices(pooled, m))
      zero(where[pi].first, where[pi].second);
  }
  return out;
}

WeightTensor fake_quantize(const WeightTensor& w, const QuantSpec& spec) {
  if (spec.bits < 2 || spec.bits > 16)
    throw ConfigError("quantization bits must be in [2, 16]");
  validate_tensor(w);
  double maxabs = 0.0;
  for (double v : w.values) maxabs = std::max(maxabs, std::abs(v));
  if (maxabs == 0.0) return w;  // scale undefined, identity
  const double qmax = static_cast<double>((1 << (spec.bits - 1)) - 1);
  const double s = maxabs / qmax;
  WeightTensor out = w;
  for (double& v : out.values) {
    double q = std::clamp(round_half_away(v / s), -qmax, qmax);
    v = q * s;
  }
  return out;
}

TokenSet token_prune(const TokenSet& tokens, double ratio,
                     std::vector<std::size_t>* kept_indices,
                     const TokenScorer& scorer) {
  if (!(ratio >= 0.0 && ratio < 1.0))
    throw ConfigError("token prune ratio must be in [0, 1)");
  if (tokens.n == 0 || tokens.embeddings.size() != tokens.n * tokens.e)
    throw ValidationError("token set shape mismatch");
  std::vector<double> scores(tokens.n);
  if (!tokens.scores.empty()) {
    if (tokens.scores.size() != tokens.n)
      throw ValidationError("token score count mismatch");
    scores = tokens.scores;
  } else {
    for (std::size_t i = 0; i < tokens.n; ++i) {
      const double* row = tokens.embeddings.data() + i * tokens.e;
      if (scorer) {
        scores[i] = scorer(row, tokens.e);
      } else {
        double s = 0.0;
        for (std::size_t j = 0; j < tokens.e; ++j) s += row[j] * row[j];
        scores[i] = std::sqrt(s);
      }
    }
  }
  auto n_keep = static_cast<std::size_t>(
      std::ceil((1.0 - ratio) * static_cast<double>(tokens.n)));
  std::vector<std::size_t> idx(tokens.n);
  std::iota(idx.begin(), idx.end(), 0);
  // Highest score first; ties keep the earlier index (stable sort).
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  idx.resize(n_keep);
  std::sort(idx.begin(), idx.end());  // restore original order
  TokenSet out;
  out.n = n_keep;
  out.e = tokens.e;
  for (std::size_t i : idx) {
    const double* row = tokens.embeddings.data() + i * tokens.e;
    out.embeddings.insert(out.embeddings.end(), row, row + tokens.e);
    if (!tokens.scores.empty()) out.scores.push_back(tokens.scores[i]);
  }
  if (kept_indices) *kept_indices = idx;
  return out;
}

std::vector<double> dct_forward(const std::vector<double>& x) {
  const std::size_t N = x.size();
  if (N == 0) throw ConfigError("dct_forward: empty input");
  std::vector<double> c(N, 0.0);
  const double norm0 = std::sqrt(1.0 / static_cast<double>(N));
  const double norm = std::sqrt(2.0 / static_cast<double>(N));
  for (std::size_t k = 0; k < N; ++k) {
    double s = 0.0;
    for (std::size_t n = 0; n < N; ++n)
      s += x[n] * std::cos(std::numbers::pi * (2.0 * n + 1.0) * k /
                           (2.0 * static_cast<double>(N)));
    c[k] = (k == 0 ? norm0 : norm) * s;
  }
  return c;
}

std::vector<double> dct_inverse(const std::vector<double>& c) {
  const std::size_t N = c.size();
  if (N == 0) throw ConfigError("dct_inverse: empty input");
  std::vector<double> x(N, 0.0);
  const double norm0 = std::sqrt(1.0 / static_cast<double>(N));
  const double norm = std::sqrt(2.0 / static_cast<double>(N));
  for (std::size_t n = 0; n < N; ++n) {
    double s = 0.0;
    for (std::size_t k = 0; k < N; ++k)
      s += (k == 0 ? norm0 : norm) * c[k] *
           std::cos(std::numbers::pi * (2.0 * n + 1.0) * k /
                    (2.0 * static_cast<double>(N)));
    x[n] = s;
  }
  return x;
}

CompressedChunk compress_action_chunk(const ActionChunk& chunk, double q_step,
                                      std::size_t keep) {
  if (!(q_step > 0.0)) throw ConfigError("q_step must be positive");
  if (chunk.H == 0 || chunk.values.size() != chunk.H * chunk.k)
    throw ValidationError("action chunk shape mismatch");
  keep = std::min(keep, chunk.H);
  if (keep == 0) throw ConfigError("keep must be >= 1");
  CompressedChunk out;
  out.H = chunk.H;
  out.k = chunk.k;
  out.keep = keep;
  out.q_step = q_step;
  out.f = chunk.f;
  out.coeffs.reserve(chunk.k * keep);
  std::vector<double> col(chunk.H);
  for (std::size_t j = 0; j < chunk.k; ++j) {
    for (std::size_t t = 0; t < chunk.H; ++t) col[t] = chunk.at(t, j);
    std::vector<double> c = dct_forward(col);
    for (std::size_t i = 0; i < keep; ++i)
      out.coeffs.push_back(
          static_cast<std::int64_t>(round_half_away(c[i] / q_step)));
  }
  return out;
}

ActionChunk reconstruct_action_chunk(const CompressedChunk& repr) {
  if (repr.coeffs.size() != repr.k * repr.keep)
    throw ValidationError("compressed chunk coefficient count mismatch");
  ActionChunk out;
  out.H = repr.H;
  out.k = repr.k;
  out.f = repr.f;
  out.values.assign(repr.H * repr.k, 0.0);
  for (std::size_t j = 0; j < repr.k; ++j) {
    std::vector<double> c(repr.H, 0.0);
    for (std::size_t i = 0; i < repr.keep; ++i)
      c[i] = static_cast<double>(repr.coeffs[j * repr.keep + i]) * repr.q_step;
    std::vector<double> col = dct_inverse(c);
    for (std::size_t t = 0; t < repr.H; ++t) out.at(t, j) = col[t];
  }
  return out;
}

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));  // host is little-endian (checked below)
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
T get_le(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size())
    throw ParseError("compressed chunk: truncated buffer");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

}  // namespace

std::vector<std::uint8_t> serialize_compressed_chunk(const CompressedChunk& c) {
  std::vector<std::uint8_t> out;
  put_le<std::uint64_t>(out, c.H);
  put_le<std::uint64_t>(out, c.k);
  put_le<std::uint64_t>(out, c.keep);
  put_le<double>(out, c.q_step);
  put_le<double>(out, c.f);
  for (std::int64_t v : c.coeffs) put_le<std::int64_t>(out, v);
  return out;
}

CompressedChunk deserialize_compressed_chunk(
    const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  CompressedChunk c;
  c.H = get_le<std::uint64_t>(bytes, pos);
  c.k = get_le<std::uint64_t>(bytes, pos);
  c.keep = get_le<std::uint64_t>(bytes, pos);
  c.q_step = get_le<double>(bytes, pos);
  c.f = get_le<double>(bytes, pos);
  c.coeffs.reserve(c.k * c.keep);
  for (std::size_t i = 0; i < c.k * c.keep; ++i)
    c.coeffs.push_back(get_le<std::int64_t>(bytes, pos));
  return c;
}

}  // namespace embeff
