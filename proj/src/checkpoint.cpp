#include "nasnerf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "nasnerf/error.hpp"

namespace nasnerf {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'N', 'N', 'R', 'F', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  template <typename U>
  void put(U v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(U));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}
  template <typename U>
  U get() {
    U v;
    take(&v, sizeof(U));
    return v;
  }
  void take(void* out, std::size_t n) {
    if (n > bytes_.size() - pos_) throw IoError("checkpoint: truncated at byte " + std::to_string(pos_));
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

std::string kind_name(OptimizerKind k) { return k == OptimizerKind::kAdam ? "adam" : "radam"; }

std::string header_json(const Checkpoint& c) {
  nlohmann::ordered_json j;
  j["format_version"] = c.format_version;
  j["architecture"] = nlohmann::ordered_json::parse(to_canonical_json(c.architecture));
  j["step"] = c.step;
  j["optimizer"] = {{"kind", kind_name(c.optimizer.kind)},
                    {"learning_rate", c.optimizer.learning_rate},
                    {"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2},
                    {"epsilon", c.optimizer.epsilon}};
  j["run_config"] = nlohmann::ordered_json::parse(c.run_config_json);
  return j.dump();
}

void add_mlp(std::vector<NamedTensor>& out, const std::string& prefix, const Mlp<float>& mlp) {
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    const auto& l = mlp.layers[i];
    const std::string base = prefix + "." + std::to_string(i) + ".";
    out.push_back({base + "weight", {l.out_dim, l.in_dim}, {l.weights.begin(), l.weights.end()}});
    out.push_back({base + "bias", {l.out_dim}, {l.bias.begin(), l.bias.end()}});
  }
}

void add_field(std::vector<NamedTensor>& out, const std::string& prefix, const NasNerfField<float>& f) {
  add_mlp(out, prefix + ".trunk", f.trunk);
  add_mlp(out, prefix + ".density", f.density_head);
  add_mlp(out, prefix + ".radiance", f.radiance_head);
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(ckpt.format_version);
  const std::string header = header_json(ckpt);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(header.size()));
  w.put_bytes(header.data(), header.size());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const NamedTensor& t : ckpt.tensors) {
    std::uint64_t count = 1;
    for (auto d : t.shape) count *= d;
    if (count != t.values.size()) throw ShapeError("checkpoint: tensor '" + t.name + "' shape/data mismatch");
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.name.size()));
    w.put_bytes(t.name.data(), t.name.size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) w.put<std::uint64_t>(d);
    w.put_bytes(t.values.data(), t.values.size() * sizeof(float));
  }
  return std::move(w.bytes);
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  char magic[8];
  r.take(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw IoError("checkpoint: bad magic");
  Checkpoint c;
  c.format_version = r.get<std::uint32_t>();
  if (c.format_version != kCheckpointFormatVersion) {
    throw IoError("checkpoint: unsupported format version " + std::to_string(c.format_version));
  }
  std::string header(r.get<std::uint32_t>(), '\0');
  r.take(header.data(), header.size());
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(header);
    c.architecture = parse_descriptor(j.at("architecture").dump());
    c.step = j.at("step").get<std::uint64_t>();
    const auto& o = j.at("optimizer");
    c.optimizer.kind = o.at("kind").get<std::string>() == "adam" ? OptimizerKind::kAdam : OptimizerKind::kRAdam;
    c.optimizer.learning_rate = o.at("learning_rate").get<double>();
    c.optimizer.beta1 = o.at("beta1").get<double>();
    c.optimizer.beta2 = o.at("beta2").get<double>();
    c.optimizer.epsilon = o.at("epsilon").get<double>();
    c.run_config_json = j.at("run_config").dump();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: bad header: ") + e.what());
  }
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name.resize(r.get<std::uint32_t>());
    r.take(t.name.data(), t.name.size());
    const auto rank = r.get<std::uint32_t>();
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      t.shape.push_back(r.get<std::uint64_t>());
      n *= t.shape.back();
    }
    if (n > bytes.size()) throw IoError("checkpoint: tensor '" + t.name + "' larger than file");
    t.values.resize(n);
    r.take(t.values.data(), n * sizeof(float));
    c.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw IoError("checkpoint: trailing bytes");
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize_checkpoint(bytes);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Checkpoint make_checkpoint(const NerfModel<float>& model, std::uint64_t step, const OptimizerConfig& optimizer,
                           const std::string& run_config_json) {
  Checkpoint c;
  c.architecture = model.descriptor;
  c.step = step;
  c.optimizer = optimizer;
  c.run_config_json = nlohmann::ordered_json::parse(run_config_json).dump();
  add_field(c.tensors, "coarse", model.coarse);
  add_field(c.tensors, "fine", model.fine);
  return c;
}

NerfModel<float> restore_model(const Checkpoint& ckpt) {
  NerfModel<float> model = build_model<float>(ckpt.architecture, 0);
  std::vector<NamedTensor> expected;
  add_field(expected, "coarse", model.coarse);
  add_field(expected, "fine", model.fine);
  if (expected.size() != ckpt.tensors.size()) throw IoError("checkpoint: tensor count does not match architecture");
  auto spans = parameter_spans(model);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const NamedTensor& t = ckpt.tensors[i];
    if (t.name != expected[i].name || t.shape != expected[i].shape) {
      throw IoError("checkpoint: tensor '" + t.name + "' does not match architecture slot '" + expected[i].name + "'");
    }
    std::copy(t.values.begin(), t.values.end(), spans[i].begin());
  }
  return model;
}

}  // namespace nasnerf
