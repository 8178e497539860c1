#include "acpkan/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "acpkan/io.hpp"

namespace acpkan {

namespace {

struct Record {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

std::string shape_to_string(const std::vector<std::size_t>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

std::vector<std::size_t> parse_shape(const std::string& s) {
  std::vector<std::size_t> shape;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw CheckpointError("malformed shape '" + s + "'");
    }
    shape.push_back(std::stoul(part));
  }
  if (shape.empty()) throw CheckpointError("empty shape");
  return shape;
}

std::vector<Record> parse_records(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointHeader) {
    throw CheckpointError("missing or unsupported checkpoint header");
  }
  std::vector<Record> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Record r;
    std::string shape;
    if (!(ls >> r.name >> shape)) throw CheckpointError("malformed tensor record");
    r.shape = parse_shape(shape);
    std::size_t count = 1;
    for (auto d : r.shape) count *= d;
    r.values.reserve(count);
    std::string token;
    while (ls >> token) {
      char* end = nullptr;
      const double v = std::strtod(token.c_str(), &end);
      if (end == token.c_str() || *end != '\0') throw CheckpointError("malformed value in tensor " + r.name);
      r.values.push_back(v);
    }
    if (r.values.size() != count) throw CheckpointError("tensor " + r.name + " has the wrong number of values");
    records.push_back(std::move(r));
  }
  if (records.empty()) throw CheckpointError("checkpoint holds no tensors");
  return records;
}

const Record& find(const std::vector<Record>& records, const std::string& name) {
  for (const auto& r : records) {
    if (r.name == name) return r;
  }
  throw CheckpointError("checkpoint is missing tensor " + name);
}

std::unique_ptr<Network> build_architecture(const std::vector<Record>& records) {
  auto has = [&](const std::string& name) {
    for (const auto& r : records) {
      if (r.name == name) return true;
    }
    return false;
  };
  auto dim = [](const Record& r, std::size_t axis) {
    if (axis >= r.shape.size()) throw CheckpointError("tensor " + r.name + " has too few axes");
    return static_cast<int>(r.shape[axis]);
  };

  if (has("embed.W")) {
    AcPkanConfig c;
    const auto& embed = find(records, "embed.W");
    c.d_model = dim(embed, 0);
    c.d_in = dim(embed, 1);
    c.d_hidden = dim(find(records, "encoder_u.W"), 0);
    c.d_out = dim(find(records, "out.W"), 0);
    c.layers = 0;
    while (has("cheby." + std::to_string(c.layers) + ".C")) ++c.layers;
    if (c.layers == 0) throw CheckpointError("checkpoint has no Chebyshev blocks");
    c.degree = dim(find(records, "cheby.0.C"), 2) - 1;
    try {
      return std::make_unique<AcPkanModel>(c);
    } catch (const std::invalid_argument& e) {
      throw CheckpointError(std::string("invalid architecture: ") + e.what());
    }
  }
  if (has("layer.0.W")) {
    std::vector<int> sizes{dim(find(records, "layer.0.W"), 1)};
    for (int l = 0; has("layer." + std::to_string(l) + ".W"); ++l) {
      sizes.push_back(dim(find(records, "layer." + std::to_string(l) + ".W"), 0));
    }
    return std::make_unique<MlpPinn>(sizes);
  }
  throw CheckpointError("unrecognised tensor layout");
}

}  // namespace

std::string checkpoint_to_string(const Network& model) {
  std::string out(kCheckpointHeader);
  out += '\n';
  const auto values = model.parameters().values();
  char buf[40];
  for (const auto& t : model.parameters().tensors()) {
    out += t.name;
    out += ' ';
    out += shape_to_string(t.shape);
    for (std::size_t i = 0; i < t.size; ++i) {
      std::snprintf(buf, sizeof buf, " %.17g", values[t.offset + i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void checkpoint_save(const Network& model, const std::filesystem::path& path) {
  write_file_atomic(path, checkpoint_to_string(model));
}

std::unique_ptr<Network> checkpoint_from_string(const std::string& text) {
  std::istringstream in(text);
  const auto records = parse_records(in);
  auto model = build_architecture(records);

  const auto& tensors = model->parameters().tensors();
  if (tensors.size() != records.size()) throw CheckpointError("tensor count does not match the architecture");
  auto values = model->parameters().values();
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    if (tensors[k].name != records[k].name) {
      throw CheckpointError("expected tensor " + tensors[k].name + ", found " + records[k].name);
    }
    if (tensors[k].shape != records[k].shape) throw CheckpointError("shape mismatch for tensor " + tensors[k].name);
    std::copy(records[k].values.begin(), records[k].values.end(),
              values.begin() + static_cast<std::ptrdiff_t>(tensors[k].offset));
  }
  return model;
}

std::unique_ptr<Network> checkpoint_load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace acpkan
