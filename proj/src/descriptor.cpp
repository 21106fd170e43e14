#include "nasnerf/descriptor.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "nasnerf/error.hpp"

namespace nasnerf {
namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json cell_json(const FieldCellConfig& c) {
  ordered_json j;
  j["depths"] = c.depths;
  j["channels"] = c.channels;
  return j;
}

FieldCellConfig cell_from_json(const nlohmann::json& j, const char* name) {
  if (!j.is_object() || !j.contains("depths") || !j.contains("channels")) {
    throw ConfigError(std::string("descriptor: '") + name + "' needs depths and channels");
  }
  FieldCellConfig c;
  const auto& d = j.at("depths");
  const auto& ch = j.at("channels");
  if (!d.is_array() || d.size() != 3 || !ch.is_array() || ch.size() != 3) {
    throw ConfigError(std::string("descriptor: '") + name + "' depths/channels must have 3 entries");
  }
  for (int i = 0; i < 3; ++i) {
    if (!d[i].is_number_integer() || !ch[i].is_number_integer()) {
      throw ConfigError(std::string("descriptor: '") + name + "' entries must be integers");
    }
    c.depths[i] = d[i].get<int>();
    c.channels[i] = ch[i].get<int>();
  }
  return c;
}

int int_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) {
    throw ConfigError(std::string("descriptor: missing integer '") + key + "'");
  }
  return j.at(key).get<int>();
}

}  // namespace

void FieldCellConfig::validate() const {
  if (depths[1] != 1) throw ConfigError("field cell: D2 must be 1, got " + std::to_string(depths[1]));
  for (int i = 0; i < 3; ++i) {
    if (depths[i] < 1) throw ConfigError("field cell: depths must be >= 1");
    if (channels[i] < 1) throw ConfigError("field cell: channels must be >= 1");
  }
}

void ArchitectureDescriptor::validate() const {
  if (schema_version != kDescriptorSchemaVersion) {
    throw ConfigError("descriptor: unsupported schema_version " + std::to_string(schema_version));
  }
  coarse.validate();
  fine.validate();
  if (pos_enc_L < 0 || dir_enc_L < 0) throw ConfigError("descriptor: encoder frequencies must be >= 0");
  if (head_width < 1) throw ConfigError("descriptor: head_width must be >= 1");
}

ArchitectureDescriptor baseline_descriptor() {
  ArchitectureDescriptor d;
  d.coarse = FieldCellConfig{{4, 1, 3}, {256, 256, 256}};
  d.fine = d.coarse;
  return d;
}

std::string to_canonical_json(const ArchitectureDescriptor& d) {
  ordered_json j;
  j["schema_version"] = d.schema_version;
  j["coarse"] = cell_json(d.coarse);
  j["fine"] = cell_json(d.fine);
  j["pos_enc_L"] = d.pos_enc_L;
  j["dir_enc_L"] = d.dir_enc_L;
  j["head_width"] = d.head_width;
  return j.dump(2) + "\n";
}

ArchitectureDescriptor parse_descriptor(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("descriptor: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("descriptor: top level must be an object");
  ArchitectureDescriptor d;
  d.schema_version = int_field(j, "schema_version");
  if (d.schema_version != kDescriptorSchemaVersion) {
    throw ConfigError("descriptor: unsupported schema_version " + std::to_string(d.schema_version) + " (expected " +
                      std::to_string(kDescriptorSchemaVersion) + ")");
  }
  if (!j.contains("coarse") || !j.contains("fine")) throw ConfigError("descriptor: needs 'coarse' and 'fine'");
  d.coarse = cell_from_json(j.at("coarse"), "coarse");
  d.fine = cell_from_json(j.at("fine"), "fine");
  d.pos_enc_L = int_field(j, "pos_enc_L");
  d.dir_enc_L = int_field(j, "dir_enc_L");
  d.head_width = int_field(j, "head_width");
  d.validate();
  return d;
}

void save_descriptor(const ArchitectureDescriptor& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write descriptor " + path.string());
  out << to_canonical_json(d);
  if (!out) throw IoError("failed writing descriptor " + path.string());
}

ArchitectureDescriptor load_descriptor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read descriptor " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_descriptor(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::uint64_t descriptor_hash(const ArchitectureDescriptor& d) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_canonical_json(d)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string describe(const ArchitectureDescriptor& d) {
  auto cell = [](const FieldCellConfig& c) {
    std::ostringstream os;
    os << '[' << c.depths[0] << ',' << c.depths[1] << ',' << c.depths[2] << "]x[" << c.channels[0] << ','
       << c.channels[1] << ',' << c.channels[2] << ']';
    return os.str();
  };
  return "c" + cell(d.coarse) + " f" + cell(d.fine);
}

}  // namespace nasnerf
