#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace compsem {

enum class SettingKind { nc_nospec, nc_withcls, nc_all, in_context, templated };

/// How word vectors were obtained. `templated` carries a sentence with one `<word>` slot.
struct RepresentationSetting {
  SettingKind kind = SettingKind::nc_nospec;
  std::string template_text;

  /// Accepts the CLI names nc-nospec, nc-withcls, nc-all, context, templated.
  static RepresentationSetting parse(std::string_view name, std::string_view template_text = {});
  /// Inverse of `descriptor()`.
  static RepresentationSetting from_descriptor(std::string_view descriptor);

  std::string name() const;
  /// `name()`, plus `:<template>` for templated settings.
  std::string descriptor() const;
  bool is_no_context() const noexcept {
    return kind == SettingKind::nc_nospec || kind == SettingKind::nc_withcls || kind == SettingKind::nc_all;
  }

  bool operator==(const RepresentationSetting&) const = default;
};

/// Per-layer vectors for one word. Layer indices run 1..n_layers; index 0 is the
/// input embedding layer and exists only when `has_layer0()`.
class LayeredEmbedding {
public:
  LayeredEmbedding(std::string word, std::size_t dim, std::size_t n_layers, bool has_layer0,
                   std::vector<float> values, std::int64_t n_instances);

  const std::string& word() const noexcept { return word_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t n_layers() const noexcept { return n_layers_; }
  bool has_layer0() const noexcept { return has_layer0_; }
  std::int64_t n_instances() const noexcept { return n_instances_; }

  std::span<const float> layer(std::size_t index) const;
  /// Stored layers in order (layer 0 first when present), row-major.
  std::span<const float> values() const noexcept { return values_; }
  std::size_t stored_layers() const noexcept { return n_layers_ + (has_layer0_ ? 1 : 0); }

  bool operator==(const LayeredEmbedding&) const = default;

private:
  std::string word_;
  std::size_t dim_;
  std::size_t n_layers_;
  bool has_layer0_;
  std::vector<float> values_;
  std::int64_t n_instances_;
};

/// Immutable word → LayeredEmbedding map for a single representation setting.
class EmbeddingStore {
public:
  EmbeddingStore(RepresentationSetting setting, std::size_t dim, std::size_t n_layers, bool has_layer0,
                 std::string provenance, std::vector<LayeredEmbedding> entries);

  const RepresentationSetting& setting() const noexcept { return setting_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t n_layers() const noexcept { return n_layers_; }
  bool has_layer0() const noexcept { return has_layer0_; }
  const std::string& provenance() const noexcept { return provenance_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::map<std::string, LayeredEmbedding>& entries() const noexcept { return entries_; }

  /// nullptr on a miss; a missing word is never replaced by a zero vector.
  const LayeredEmbedding* find(std::string_view word) const;
  const LayeredEmbedding* find(std::string_view word, const RepresentationSetting& setting) const;

  bool operator==(const EmbeddingStore&) const = default;

private:
  RepresentationSetting setting_;
  std::size_t dim_;
  std::size_t n_layers_;
  bool has_layer0_;
  std::string provenance_;
  std::map<std::string, LayeredEmbedding> entries_;
};

/// Single-vector-per-word store (static embedding baseline).
class StaticStore {
public:
  StaticStore(std::size_t dim, std::map<std::string, std::vector<float>> entries);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::optional<std::span<const float>> find(std::string_view word) const;
  const std::map<std::string, std::vector<float>>& entries() const noexcept { return entries_; }

private:
  std::size_t dim_;
  std::map<std::string, std::vector<float>> entries_;
};

enum class DumpEncoding { jsonl, binary };

struct DumpOptions {
  DumpEncoding encoding = DumpEncoding::jsonl;
  std::size_t records_per_file = 4096;
};

inline constexpr int kDumpFormatVersion = 1;

/// Writes `manifest.json` plus `records-NNNNN.jsonl` files, or `records.bin` for the packed variant.
void write_dump(const EmbeddingStore& store, const std::filesystem::path& dir, const DumpOptions& options = {});
EmbeddingStore load_dump(const std::filesystem::path& dir);

/// Packed record stream ("CPE1" header). Exposed for tooling and tests.
std::string encode_packed(const EmbeddingStore& store);

struct StaticLoad {
  StaticStore store;
  std::size_t line_count = 0;
};

/// Text vectors: `word c1 c2 ... cd` per line, single-space separated, no header.
StaticLoad load_static(const std::filesystem::path& path);

using AnyStore = std::variant<EmbeddingStore, StaticStore>;

/// Directory → layered dump; regular file → static text vectors.
AnyStore open_store(const std::filesystem::path& path);

}  // namespace compsem
