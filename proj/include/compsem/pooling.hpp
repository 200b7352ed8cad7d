#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace compsem {

/// Half-open range of token positions.
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool empty() const noexcept { return end <= begin; }
  bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
  bool operator==(const TokenRange&) const = default;
};

/// One encoded sequence at one layer: a vector per token plus where the word sits.
struct TokenizedInstance {
  std::span<const std::vector<double>> tokens;
  TokenRange word_span;
  std::optional<std::size_t> cls_index;  // begin marker
  std::optional<std::size_t> sep_index;  // end marker

  /// Throws DataError if the span is empty/out of bounds or a marker falls inside it.
  void validate() const;
};

enum class NcVariant { nospec, withcls, all };

/// Mean over the word's subword tokens, optionally with the begin marker
/// (`withcls`) or both markers (`all`).
std::vector<double> pool_nc(const TokenizedInstance& instance, NcVariant variant);

struct ContextMean {
  std::vector<double> vector;
  std::size_t n_instances = 0;
};

/// Mean over per-sentence word vectors (each already pooled as `nospec`).
ContextMean pool_in_context(std::span<const std::vector<double>> instances);

/// Word vector from an instantiated template; identical to `pool_nc(instance, nospec)`.
std::vector<double> pool_templated(const TokenizedInstance& instance);

/// Componentwise mean of `rows[i]` for i in `indices`, accumulated as a balanced tree of partial means.
std::vector<double> pairwise_mean(std::span<const std::vector<double>> rows, std::span<const std::size_t> indices);

}  // namespace compsem
