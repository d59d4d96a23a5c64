#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "embeff/compress.hpp"

namespace embeff {

/// Ordered named tensors plus free-form provenance metadata. On disk: a
/// plain-text index (magic, meta line, one line per tensor) followed by the
/// concatenated values as little-endian binary64.
struct Model {
  std::vector<WeightTensor> tensors;
  std::map<std::string, std::string> meta;

  const WeightTensor& tensor(const std::string& name) const;
  WeightTensor& tensor(const std::string& name);
};

Model load_model(const std::filesystem::path& file);
void save_model(const Model& model, const std::filesystem::path& file);

}  // namespace embeff
