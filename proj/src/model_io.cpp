#include "embeff/model_io.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "embeff/errors.hpp"
#include "json.hpp"

namespace embeff {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "model file I/O assumes a little-endian host");

namespace {
constexpr const char* kMagic = "EMBEFF-MODEL 1";
}

const WeightTensor& Model::tensor(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw ConfigError("model has no tensor named '" + name + "'");
}

WeightTensor& Model::tensor(const std::string& name) {
  return const_cast<WeightTensor&>(std::as_const(*this).tensor(name));
}

void save_model(const Model& model, const std::filesystem::path& file) {
  for (const auto& t : model.tensors) validate_tensor(t);
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot write model file " + file.string());
  out << kMagic << '\n';
  out << "meta " << json(model.meta).dump() << '\n';
  for (const auto& t : model.tensors) {
    out << "tensor " << t.name << " " << t.shape.size();
    for (std::size_t s : t.shape) out << " " << s;
    out << '\n';
  }
  out << "DATA\n";
  for (const auto& t : model.tensors)
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(double)));
}

Model load_model(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError("cannot open model file " + file.string());
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw ParseError(file.string() + ": not a model file (bad magic)");
  Model m;
  while (std::getline(in, line)) {
    if (line == "DATA") break;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "meta") {
      std::string rest;
      std::getline(ls, rest);
      json j = json::parse(rest, nullptr, false);
      if (j.is_discarded())
        throw ParseError(file.string() + ": malformed meta line");
      m.meta = j.get<std::map<std::string, std::string>>();
    } else if (tag == "tensor") {
      WeightTensor t;
      std::size_t ndim = 0;
      ls >> t.name >> ndim;
      std::size_t n = 1;
      for (std::size_t i = 0; i < ndim; ++i) {
        std::size_t s = 0;
        ls >> s;
        t.shape.push_back(s);
        n *= s;
      }
      if (!ls) throw ParseError(file.string() + ": malformed tensor line");
      t.values.resize(n);
      m.tensors.push_back(std::move(t));
    } else {
      throw ParseError(file.string() + ": unexpected index line '" + line + "'");
    }
  }
  for (auto& t : m.tensors) {
    in.read(reinterpret_cast<char*>(t.values.data()),
            static_cast<std::streamsize>(t.values.size() * sizeof(double)));
    if (in.gcount() !=
        static_cast<std::streamsize>(t.values.size() * sizeof(double)))
      throw ParseError(file.string() + ": truncated data for tensor '" +
                       t.name + "'");
    validate_tensor(t);
  }
  return m;
}

}  // namespace embeff
