#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "compsem/embeddings.hpp"
#include "compsem/pooling.hpp"

namespace compsem {

/// Encoder output for one input text.
///
/// `spans[i]` is the byte range of token i in the input text; special markers
/// have an empty range. `layers[l][i]` is the vector of token i at stored layer l.
struct Encoding {
  std::vector<std::string> tokens;
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::vector<std::vector<std::vector<float>>> layers;
  bool has_layer0 = true;  // layers[0] is the input embedding output

  std::size_t n_layers() const noexcept { return layers.size() - (has_layer0 ? 1 : 0); }
  std::size_t dim() const noexcept { return layers.empty() || layers[0].empty() ? 0 : layers[0][0].size(); }

  /// Throws BackendError on ragged or inconsistent shapes.
  void validate() const;
};

class InferenceBackend {
public:
  virtual ~InferenceBackend() = default;
  virtual Encoding encode(std::string_view text) = 0;
  virtual std::string describe() const = 0;
};

/// Out-of-process encoder speaking newline-delimited JSON over stdin/stdout.
///
/// Request:  {"id": n, "text": "..."}
/// Response: {"id": n, "tokens": [...], "spans": [[b,e],...], "layers": [[[f32...] per token] per layer]}
///           optionally "has_layer0": bool (default true), or {"id": n, "error": "..."}.
class PipeBackend final : public InferenceBackend {
public:
  explicit PipeBackend(std::string command);
  ~PipeBackend() override;
  PipeBackend(const PipeBackend&) = delete;
  PipeBackend& operator=(const PipeBackend&) = delete;

  Encoding encode(std::string_view text) override;
  std::string describe() const override { return "pipe:" + command_; }

private:
  std::string read_line();

  std::string command_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::uint64_t next_id_ = 0;
};

/// Parses one backend response line (exposed for tests and alternative transports).
Encoding parse_encoding(std::string_view response_line, std::uint64_t expected_id);

/// Token range that exactly tiles the byte range [begin, end), or nullopt when a
/// token straddles either boundary.
std::optional<TokenRange> resolve_word_span(const Encoding& encoding, std::size_t begin, std::size_t end);

struct EmbedRequest {
  std::string word;
  std::vector<std::string> sentences;  // used by the in-context setting only
};

struct EmbedMiss {
  std::string word;
  std::string reason;
};

struct EmbedResult {
  EmbeddingStore store;
  std::vector<EmbedMiss> misses;
  std::map<std::string, std::int64_t> token_counts;  // subwords of the word in its first resolved input
  std::size_t skipped_sentences = 0;                 // in-context sentences whose span did not resolve
};

EmbedResult embed_via_backend(std::span<const EmbedRequest> requests, const RepresentationSetting& setting,
                              InferenceBackend& backend, std::string provenance = {});

}  // namespace compsem
