#include "compsem/embeddings.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "compsem/corpus.hpp"
#include "compsem/error.hpp"
#include "compsem/util.hpp"

namespace compsem {
namespace {

using nlohmann::json;

constexpr char kPackedMagic[4] = {'C', 'P', 'E', '1'};

void check_finite(std::span<const float> values, std::size_t dim, bool has_layer0, const std::string& word) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      const std::size_t stored = i / dim;
      const std::size_t layer = has_layer0 ? stored : stored + 1;
      throw DataError("non-finite component in word '" + word + "' at layer " + std::to_string(layer) +
                      ", component " + std::to_string(i % dim));
    }
  }
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class ByteReader {
public:
  ByteReader(std::string_view data, std::string name) : data_(data), name_(std::move(name)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint16_t u16() {
    need(2);
    auto v = static_cast<std::uint16_t>(static_cast<unsigned char>(data_[pos_]) |
                                        (static_cast<unsigned char>(data_[pos_ + 1]) << 8));
    pos_ += 2;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto v = data_.substr(pos_, n);
    pos_ += n;
    return v;
  }
  bool done() const { return pos_ == data_.size(); }

private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw DataError(name_ + ": truncated packed record stream");
  }
  std::string_view data_;
  std::string name_;
  std::size_t pos_ = 0;
};

std::string record_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "records-%05zu.jsonl", index);
  return buf;
}

json record_to_json(const LayeredEmbedding& e) {
  json layers = json::array();
  for (std::size_t l = 0; l < e.stored_layers(); ++l) {
    auto row = e.values().subspan(l * e.dim(), e.dim());
    json values = json::array();
    for (float v : row) values.push_back(static_cast<double>(v));
    layers.push_back(std::move(values));
  }
  json j = json::object();
  j["word"] = e.word();
  j["n_instances"] = e.n_instances();
  j["layers"] = std::move(layers);
  return j;
}

LayeredEmbedding record_from_json(const json& j, std::size_t dim, std::size_t n_layers, bool has_layer0,
                                  const std::string& where) {
  if (!j.is_object() || !j.contains("word") || !j["word"].is_string()) {
    throw DataError(where + ": record lacks a string 'word'");
  }
  const std::string word = j["word"].get<std::string>();
  if (!j.contains("n_instances") || !j["n_instances"].is_number_integer()) {
    throw DataError(where + ": record '" + word + "' lacks an integer 'n_instances'");
  }
  const auto& layers = j.contains("layers") ? j["layers"] : json();
  const std::size_t stored = n_layers + (has_layer0 ? 1 : 0);
  if (!layers.is_array() || layers.size() != stored) {
    throw DataError(where + ": record '" + word + "' has " + std::to_string(layers.is_array() ? layers.size() : 0) +
                    " layers, manifest says " + std::to_string(stored));
  }
  std::vector<float> values;
  values.reserve(stored * dim);
  for (std::size_t l = 0; l < stored; ++l) {
    const std::size_t layer_index = has_layer0 ? l : l + 1;
    const json& row = layers[l];
    if (!row.is_array() || row.size() != dim) {
      throw DataError(where + ": record '" + word + "' layer " + std::to_string(layer_index) + " has dimension " +
                      std::to_string(row.is_array() ? row.size() : 0) + ", manifest says " + std::to_string(dim));
    }
    for (const json& v : row) {
      if (!v.is_number()) {
        throw DataError(where + ": record '" + word + "' layer " + std::to_string(layer_index) +
                        " holds a non-numeric component");
      }
      const double d = v.get<double>();
      if (!std::isfinite(d)) {
        throw DataError("non-finite component in word '" + word + "' at layer " + std::to_string(layer_index));
      }
      values.push_back(static_cast<float>(d));
    }
  }
  return LayeredEmbedding(word, dim, n_layers, has_layer0, std::move(values), j["n_instances"].get<std::int64_t>());
}

}  // namespace

RepresentationSetting RepresentationSetting::parse(std::string_view name, std::string_view template_text) {
  RepresentationSetting s;
  if (name == "nc-nospec") s.kind = SettingKind::nc_nospec;
  else if (name == "nc-withcls") s.kind = SettingKind::nc_withcls;
  else if (name == "nc-all") s.kind = SettingKind::nc_all;
  else if (name == "context") s.kind = SettingKind::in_context;
  else if (name == "templated") s.kind = SettingKind::templated;
  else throw UsageError("unknown representation setting: " + std::string(name));
  if (s.kind == SettingKind::templated) {
    if (template_text.empty()) template_text = "This is a <word>";
    if (count_slots(template_text) != 1) {
      throw UsageError("templated setting requires exactly one <word> slot: " + std::string(template_text));
    }
    s.template_text = std::string(template_text);
  } else if (!template_text.empty()) {
    throw UsageError("a template is only valid for the templated setting");
  }
  return s;
}

RepresentationSetting RepresentationSetting::from_descriptor(std::string_view descriptor) {
  const auto colon = descriptor.find(':');
  if (colon == std::string_view::npos) return parse(descriptor);
  return parse(descriptor.substr(0, colon), descriptor.substr(colon + 1));
}

std::string RepresentationSetting::name() const {
  switch (kind) {
    case SettingKind::nc_nospec: return "nc-nospec";
    case SettingKind::nc_withcls: return "nc-withcls";
    case SettingKind::nc_all: return "nc-all";
    case SettingKind::in_context: return "context";
    case SettingKind::templated: return "templated";
  }
  return "unknown";
}

std::string RepresentationSetting::descriptor() const {
  return kind == SettingKind::templated ? name() + ":" + template_text : name();
}

LayeredEmbedding::LayeredEmbedding(std::string word, std::size_t dim, std::size_t n_layers, bool has_layer0,
                                   std::vector<float> values, std::int64_t n_instances)
    : word_(std::move(word)),
      dim_(dim),
      n_layers_(n_layers),
      has_layer0_(has_layer0),
      values_(std::move(values)),
      n_instances_(n_instances) {
  if (word_.empty()) throw DataError("embedding: empty word");
  if (dim_ == 0) throw DataError("embedding '" + word_ + "': dimension must be positive");
  if (n_layers_ == 0) throw DataError("embedding '" + word_ + "': layer count must be positive");
  if (n_instances_ < 1) throw DataError("embedding '" + word_ + "': n_instances must be at least 1");
  if (values_.size() != stored_layers() * dim_) {
    throw DataError("embedding '" + word_ + "': expected " + std::to_string(stored_layers() * dim_) +
                    " components, got " + std::to_string(values_.size()));
  }
  check_finite(values_, dim_, has_layer0_, word_);
}

std::span<const float> LayeredEmbedding::layer(std::size_t index) const {
  if (index > n_layers_ || (index == 0 && !has_layer0_)) {
    throw DataError("embedding '" + word_ + "': layer " + std::to_string(index) + " not stored");
  }
  const std::size_t row = has_layer0_ ? index : index - 1;
  return std::span<const float>(values_).subspan(row * dim_, dim_);
}

EmbeddingStore::EmbeddingStore(RepresentationSetting setting, std::size_t dim, std::size_t n_layers,
                               bool has_layer0, std::string provenance, std::vector<LayeredEmbedding> entries)
    : setting_(std::move(setting)),
      dim_(dim),
      n_layers_(n_layers),
      has_layer0_(has_layer0),
      provenance_(std::move(provenance)) {
  if (dim_ == 0 || n_layers_ == 0) throw DataError("store: dimension and layer count must be positive");
  for (LayeredEmbedding& e : entries) {
    if (e.dim() != dim_ || e.n_layers() != n_layers_ || e.has_layer0() != has_layer0_) {
      throw DataError("store: entry '" + e.word() + "' has shape " + std::to_string(e.n_layers()) + "x" +
                      std::to_string(e.dim()) + ", store is " + std::to_string(n_layers_) + "x" + std::to_string(dim_));
    }
    std::string key = e.word();
    if (!entries_.emplace(key, std::move(e)).second) throw DataError("store: duplicate word '" + key + "'");
  }
}

const LayeredEmbedding* EmbeddingStore::find(std::string_view word) const {
  auto it = entries_.find(std::string(word));
  return it == entries_.end() ? nullptr : &it->second;
}

const LayeredEmbedding* EmbeddingStore::find(std::string_view word, const RepresentationSetting& setting) const {
  return setting == setting_ ? find(word) : nullptr;
}

StaticStore::StaticStore(std::size_t dim, std::map<std::string, std::vector<float>> entries)
    : dim_(dim), entries_(std::move(entries)) {
  if (dim_ == 0) throw DataError("static store: dimension must be positive");
  for (const auto& [word, v] : entries_) {
    if (v.size() != dim_) throw DataError("static store: '" + word + "' has wrong dimension");
    for (float x : v) {
      if (!std::isfinite(x)) throw DataError("static store: non-finite component for '" + word + "'");
    }
  }
}

std::optional<std::span<const float>> StaticStore::find(std::string_view word) const {
  auto it = entries_.find(std::string(word));
  if (it == entries_.end()) return std::nullopt;
  return std::span<const float>(it->second);
}

std::string encode_packed(const EmbeddingStore& store) {
  std::string out(kPackedMagic, 4);
  const std::size_t stored = store.n_layers() + (store.has_layer0() ? 1 : 0);
  put_u32(out, static_cast<std::uint32_t>(store.dim()));
  put_u32(out, static_cast<std::uint32_t>(stored));
  put_u32(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [word, e] : store.entries()) {
    if (word.size() > 0xFFFF) throw DataError("packed dump: word longer than 65535 bytes");
    put_u16(out, static_cast<std::uint16_t>(word.size()));
    out += word;
    put_u32(out, static_cast<std::uint32_t>(e.n_instances()));
    for (float v : e.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

void write_dump(const EmbeddingStore& store, const std::filesystem::path& dir, const DumpOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create dump directory " + dir.string() + ": " + ec.message());
  if (options.records_per_file == 0) throw UsageError("records_per_file must be positive");

  json files = json::array();
  if (options.encoding == DumpEncoding::binary) {
    const std::string payload = encode_packed(store);
    write_file(dir / "records.bin", payload);
    files.push_back({{"name", "records.bin"}, {"sha256", sha256_hex(payload)}, {"records", store.size()}});
  } else {
    std::string payload;
    std::size_t in_file = 0;
    std::size_t file_index = 0;
    auto flush = [&] {
      const std::string name = record_file_name(file_index++);
      write_file(dir / name, payload);
      files.push_back({{"name", name}, {"sha256", sha256_hex(payload)}, {"records", in_file}});
      payload.clear();
      in_file = 0;
    };
    for (const auto& [word, e] : store.entries()) {
      payload += record_to_json(e).dump();
      payload += '\n';
      if (++in_file == options.records_per_file) flush();
    }
    if (in_file > 0) flush();
  }

  nlohmann::ordered_json manifest;
  manifest["format_version"] = kDumpFormatVersion;
  manifest["encoding"] = options.encoding == DumpEncoding::binary ? "binary" : "jsonl";
  manifest["dim"] = store.dim();
  manifest["n_layers"] = store.n_layers();
  manifest["has_layer0"] = store.has_layer0();
  manifest["setting"] = store.setting().descriptor();
  manifest["provenance"] = store.provenance();
  manifest["record_count"] = store.size();
  manifest["files"] = files;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

EmbeddingStore load_dump(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) throw DataError("dump " + dir.string() + ": missing manifest.json");
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::parse_error& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }

  std::size_t dim = 0, n_layers = 0, record_count = 0;
  bool has_layer0 = false;
  std::string encoding, setting_text, provenance;
  json files;
  try {
    if (manifest.at("format_version").get<int>() != kDumpFormatVersion) {
      throw DataError(manifest_path.string() + ": unsupported format_version");
    }
    dim = manifest.at("dim").get<std::size_t>();
    n_layers = manifest.at("n_layers").get<std::size_t>();
    has_layer0 = manifest.value("has_layer0", false);
    record_count = manifest.at("record_count").get<std::size_t>();
    encoding = manifest.value("encoding", "jsonl");
    setting_text = manifest.at("setting").get<std::string>();
    provenance = manifest.value("provenance", "");
    files = manifest.at("files");
  } catch (const json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  const RepresentationSetting setting = RepresentationSetting::from_descriptor(setting_text);

  std::vector<LayeredEmbedding> entries;
  entries.reserve(record_count);
  for (const json& f : files) {
    const std::string name = f.at("name").get<std::string>();
    const std::string payload = read_file(dir / name);
    if (sha256_hex(payload) != f.at("sha256").get<std::string>()) {
      throw DataError("dump " + dir.string() + ": checksum mismatch for " + name);
    }
    if (encoding == "binary") {
      ByteReader reader(payload, name);
      if (reader.bytes(4) != std::string_view(kPackedMagic, 4)) throw DataError(name + ": bad magic");
      const std::uint32_t file_dim = reader.u32();
      const std::uint32_t stored = reader.u32();
      const std::uint32_t count = reader.u32();
      if (file_dim != dim || stored != n_layers + (has_layer0 ? 1 : 0)) {
        throw DataError(name + ": header shape disagrees with manifest");
      }
      for (std::uint32_t r = 0; r < count; ++r) {
        const std::uint16_t len = reader.u16();
        std::string word(reader.bytes(len));
        const std::uint32_t n_instances = reader.u32();
        std::vector<float> values(static_cast<std::size_t>(stored) * dim);
        for (float& v : values) v = reader.f32();
        entries.emplace_back(std::move(word), dim, n_layers, has_layer0, std::move(values), n_instances);
      }
      if (!reader.done()) throw DataError(name + ": trailing bytes after last record");
    } else if (encoding == "jsonl") {
      std::istringstream in(payload);
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::string where = name + ":" + std::to_string(line_no);
        json record;
        try {
          record = json::parse(line);
        } catch (const json::parse_error& e) {
          throw DataError(where + ": " + e.what());
        }
        entries.push_back(record_from_json(record, dim, n_layers, has_layer0, where));
      }
    } else {
      throw DataError(manifest_path.string() + ": unknown encoding '" + encoding + "'");
    }
  }
  if (entries.size() != record_count) {
    throw DataError("dump " + dir.string() + ": manifest says " + std::to_string(record_count) + " records, found " +
                    std::to_string(entries.size()));
  }
  return EmbeddingStore(setting, dim, n_layers, has_layer0, provenance, std::move(entries));
}

StaticLoad load_static(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::map<std::string, std::vector<float>> entries;
  std::size_t dim = 0;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::pair<std::size_t, std::string_view>> fields;  // (byte column, text)
    std::string_view view(line);
    std::size_t pos = 0;
    while (pos < view.size()) {
      while (pos < view.size() && (view[pos] == ' ' || view[pos] == '\t')) ++pos;
      if (pos >= view.size()) break;
      std::size_t end = pos;
      while (end < view.size() && view[end] != ' ' && view[end] != '\t') ++end;
      fields.emplace_back(pos, view.substr(pos, end - pos));
      pos = end;
    }
    const std::string where = path.string() + ": line " + std::to_string(line_no);
    if (fields.size() < 2) throw DataError(where + ": expected a word followed by components");
    const std::size_t components = fields.size() - 1;
    if (dim == 0) dim = components;
    if (components != dim) {
      throw DataError(where + ": ragged line with " + std::to_string(components) + " components, expected " +
                      std::to_string(dim));
    }
    std::vector<float> v(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      double value = 0.0;
      const auto& [column, text] = fields[k + 1];
      if (!parse_double(text, value) || !std::isfinite(value)) {
        throw DataError(where + ", column " + std::to_string(column + 1) + ": non-numeric component '" +
                        std::string(text) + "'");
      }
      v[k] = static_cast<float>(value);
    }
    entries.emplace(std::string(fields[0].second), std::move(v));
  }
  if (dim == 0) throw DataError(path.string() + ": no vectors");
  return {StaticStore(dim, std::move(entries)), line_no};
}

AnyStore open_store(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return load_dump(path);
  return std::move(load_static(path).store);
}

}  // namespace compsem
