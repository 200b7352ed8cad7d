#include "compsem/backend.hpp"

#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include <nlohmann/json.hpp>

#include "compsem/corpus.hpp"
#include "compsem/error.hpp"

extern char** environ;

namespace compsem {
namespace {

using nlohmann::json;

std::optional<std::size_t> begin_marker(const Encoding& enc) {
  if (!enc.spans.empty() && enc.spans.front().first == enc.spans.front().second) return 0;
  return std::nullopt;
}

std::optional<std::size_t> end_marker(const Encoding& enc) {
  if (enc.spans.size() >= 2 && enc.spans.back().first == enc.spans.back().second) return enc.spans.size() - 1;
  return std::nullopt;
}

// Per-layer pooled vectors for the word span of one encoding.
std::vector<std::vector<double>> pool_layers(const Encoding& enc, TokenRange span, SettingKind kind) {
  std::vector<std::vector<double>> out;
  out.reserve(enc.layers.size());
  std::vector<std::vector<double>> tokens;
  for (const auto& layer : enc.layers) {
    tokens.assign(layer.size(), {});
    for (std::size_t i = 0; i < layer.size(); ++i) tokens[i].assign(layer[i].begin(), layer[i].end());
    TokenizedInstance instance{tokens, span, begin_marker(enc), end_marker(enc)};
    try {
      switch (kind) {
        case SettingKind::nc_withcls: out.push_back(pool_nc(instance, NcVariant::withcls)); break;
        case SettingKind::nc_all: out.push_back(pool_nc(instance, NcVariant::all)); break;
        case SettingKind::templated: out.push_back(pool_templated(instance)); break;
        default: out.push_back(pool_nc(instance, NcVariant::nospec)); break;
      }
    } catch (const DataError& e) {
      throw BackendError(std::string("backend output cannot be pooled: ") + e.what());
    }
  }
  return out;
}

struct Shape {
  std::size_t dim = 0;
  std::size_t stored = 0;
  bool has_layer0 = false;
  bool known = false;

  void check(const Encoding& enc, const std::string& word) {
    if (!known) {
      dim = enc.dim();
      stored = enc.layers.size();
      has_layer0 = enc.has_layer0;
      known = true;
      return;
    }
    if (enc.dim() != dim || enc.layers.size() != stored || enc.has_layer0 != has_layer0) {
      throw BackendError("backend returned inconsistent shape for '" + word + "'");
    }
  }
};

}  // namespace

void Encoding::validate() const {
  if (tokens.size() != spans.size()) throw BackendError("backend: tokens and spans differ in length");
  if (layers.empty() || (has_layer0 && layers.size() < 2)) throw BackendError("backend: no encoder layers");
  const std::size_t d = dim();
  if (d == 0) throw BackendError("backend: empty token vectors");
  for (const auto& layer : layers) {
    if (layer.size() != tokens.size()) throw BackendError("backend: layer token count differs from tokens");
    for (const auto& v : layer) {
      if (v.size() != d) throw BackendError("backend: ragged token vectors");
      for (float x : v) {
        if (!std::isfinite(x)) throw BackendError("backend: non-finite component");
      }
    }
  }
  for (const auto& [b, e] : spans) {
    if (e < b) throw BackendError("backend: span end precedes start");
  }
}

Encoding parse_encoding(std::string_view response_line, std::uint64_t expected_id) {
  json j;
  try {
    j = json::parse(response_line);
  } catch (const json::parse_error& e) {
    throw BackendError(std::string("backend: malformed response: ") + e.what());
  }
  try {
    if (j.at("id").get<std::uint64_t>() != expected_id) throw BackendError("backend: response id mismatch");
    if (j.contains("error")) throw BackendError("backend: " + j["error"].get<std::string>());
    Encoding enc;
    enc.tokens = j.at("tokens").get<std::vector<std::string>>();
    for (const auto& s : j.at("spans")) enc.spans.emplace_back(s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>());
    enc.layers = j.at("layers").get<std::vector<std::vector<std::vector<float>>>>();
    enc.has_layer0 = j.value("has_layer0", true);
    enc.validate();
    return enc;
  } catch (const json::exception& e) {
    throw BackendError(std::string("backend: response schema: ") + e.what());
  }
}

std::optional<TokenRange> resolve_word_span(const Encoding& encoding, std::size_t begin, std::size_t end) {
  std::optional<std::size_t> first;
  std::size_t last = 0;
  std::size_t covered = begin;
  for (std::size_t i = 0; i < encoding.spans.size(); ++i) {
    const auto [b, e] = encoding.spans[i];
    if (b == e) {
      if (first && covered < end) return std::nullopt;  // marker interrupts the word
      continue;
    }
    if (e <= begin || b >= end) continue;
    if (b < begin || e > end) return std::nullopt;  // straddles a boundary
    if (b != covered) return std::nullopt;          // gap inside the word
    if (!first) first = i;
    last = i;
    covered = e;
  }
  if (!first || covered != end) return std::nullopt;
  return TokenRange{*first, last + 1};
}

PipeBackend::PipeBackend(std::string command) : command_(std::move(command)) {
  int in_pair[2];
  int out_pair[2];
  if (socketpair(AF_UNIX, SOCK_STREAM, 0, in_pair) != 0 || socketpair(AF_UNIX, SOCK_STREAM, 0, out_pair) != 0) {
    throw BackendError(std::string("backend: socketpair failed: ") + std::strerror(errno));
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pair[1], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pair[1], STDOUT_FILENO);
  for (int fd : {in_pair[0], in_pair[1], out_pair[0], out_pair[1]}) posix_spawn_file_actions_addclose(&actions, fd);

  std::string shell = "/bin/sh";
  std::string flag = "-c";
  char* argv[] = {shell.data(), flag.data(), command_.data(), nullptr};
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, "/bin/sh", &actions, nullptr, argv, environ);
  posix_spawn_file_actions_destroy(&actions);
  close(in_pair[1]);
  close(out_pair[1]);
  if (rc != 0) {
    close(in_pair[0]);
    close(out_pair[0]);
    throw BackendError("backend: cannot start '" + command_ + "': " + std::strerror(rc));
  }
  pid_ = pid;
  to_child_ = in_pair[0];
  from_child_ = out_pair[0];
}

PipeBackend::~PipeBackend() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    using namespace std::chrono_literals;
    int status = 0;
    for (int i = 0; i < 200; ++i) {
      if (waitpid(pid_, &status, WNOHANG) == pid_) return;
      std::this_thread::sleep_for(10ms);
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, &status, 0);
  }
}

std::string PipeBackend::read_line() {
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    char chunk[65536];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw BackendError("backend: process closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

Encoding PipeBackend::encode(std::string_view text) {
  const std::uint64_t id = next_id_++;
  json request = {{"id", id}, {"text", std::string(text)}};
  std::string line = request.dump() + "\n";
  std::size_t sent = 0;
  while (sent < line.size()) {
    const ssize_t n = ::send(to_child_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw BackendError("backend: write failed: " + std::string(std::strerror(errno)));
    sent += static_cast<std::size_t>(n);
  }
  return parse_encoding(read_line(), id);
}

EmbedResult embed_via_backend(std::span<const EmbedRequest> requests, const RepresentationSetting& setting,
                              InferenceBackend& backend, std::string provenance) {
  std::vector<const EmbedRequest*> ordered;
  for (const EmbedRequest& r : requests) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) { return a->word < b->word; });

  Shape shape;
  std::vector<std::pair<std::string, std::pair<std::vector<std::vector<double>>, std::int64_t>>> pooled;
  std::vector<EmbedMiss> misses;
  std::map<std::string, std::int64_t> token_counts;
  std::size_t skipped = 0;

  for (const EmbedRequest* req : ordered) {
    const std::string& word = req->word;
    if (!pooled.empty() && pooled.back().first == word) continue;

    if (setting.kind == SettingKind::in_context) {
      std::vector<std::vector<std::vector<double>>> per_sentence;  // [sentence][layer] -> vector
      for (const std::string& sentence : req->sentences) {
        auto where = find_whole_word(sentence, word);
        if (!where) {
          ++skipped;
          continue;
        }
        Encoding enc = backend.encode(sentence);
        auto span = resolve_word_span(enc, where->begin, where->end);
        if (!span) {
          ++skipped;
          continue;
        }
        shape.check(enc, word);
        token_counts.emplace(word, static_cast<std::int64_t>(span->size()));
        per_sentence.push_back(pool_layers(enc, *span, SettingKind::nc_nospec));
      }
      if (per_sentence.empty()) {
        misses.push_back({word, req->sentences.empty() ? "no context sentences" : "no sentence resolved"});
        continue;
      }
      std::vector<std::vector<double>> layers(shape.stored);
      std::vector<std::vector<double>> column(per_sentence.size());
      for (std::size_t l = 0; l < shape.stored; ++l) {
        for (std::size_t s = 0; s < per_sentence.size(); ++s) column[s] = per_sentence[s][l];
        layers[l] = pool_in_context(column).vector;
      }
      pooled.push_back({word, {std::move(layers), static_cast<std::int64_t>(per_sentence.size())}});
      continue;
    }

    std::string text = word;
    std::size_t offset = 0;
    if (setting.kind == SettingKind::templated) {
      text = instantiate_template(setting.template_text, word);
      offset = setting.template_text.find(kTemplateSlot);
    }
    Encoding enc = backend.encode(text);
    auto span = resolve_word_span(enc, offset, offset + word.size());
    if (!span) {
      misses.push_back({word, "word span did not resolve to whole tokens"});
      continue;
    }
    shape.check(enc, word);
    token_counts.emplace(word, static_cast<std::int64_t>(span->size()));
    pooled.push_back({word, {pool_layers(enc, *span, setting.kind), 1}});
  }

  if (!shape.known) throw BackendError("backend: no word could be embedded");
  std::vector<LayeredEmbedding> entries;
  entries.reserve(pooled.size());
  const std::size_t n_layers = shape.stored - (shape.has_layer0 ? 1 : 0);
  for (auto& [word, data] : pooled) {
    std::vector<float> values;
    values.reserve(shape.stored * shape.dim);
    for (const auto& layer : data.first) {
      for (double v : layer) values.push_back(static_cast<float>(v));
    }
    entries.emplace_back(word, shape.dim, n_layers, shape.has_layer0, std::move(values), data.second);
  }
  if (provenance.empty()) provenance = backend.describe();
  return {EmbeddingStore(setting, shape.dim, n_layers, shape.has_layer0, std::move(provenance), std::move(entries)),
          std::move(misses), std::move(token_counts), skipped};
}

}  // namespace compsem
