#include "compsem/pooling.hpp"

#include <numeric>
#include <string>

#include "compsem/error.hpp"

namespace compsem {
namespace {

// Tree mean: halves are merged as m = m1 + (m2 - m1) * n2 / n, so equal inputs
// merge to themselves exactly and the error grows with log(n).
void pairwise_mean_into(std::span<const std::vector<double>> rows, std::span<const std::size_t> indices,
                        std::vector<double>& out) {
  if (indices.size() == 1) {
    out = rows[indices.front()];
    return;
  }
  const std::size_t half = indices.size() / 2;
  std::vector<double> right(out.size());
  pairwise_mean_into(rows, indices.first(half), out);
  pairwise_mean_into(rows, indices.subspan(half), right);
  const double w = static_cast<double>(indices.size() - half) / static_cast<double>(indices.size());
  for (std::size_t d = 0; d < out.size(); ++d) out[d] += (right[d] - out[d]) * w;
}

}  // namespace

void TokenizedInstance::validate() const {
  if (word_span.empty()) throw DataError("pooling: empty word span");
  if (word_span.end > tokens.size()) {
    throw DataError("pooling: word span [" + std::to_string(word_span.begin) + "," + std::to_string(word_span.end) +
                    ") exceeds " + std::to_string(tokens.size()) + " tokens");
  }
  for (const auto& marker : {cls_index, sep_index}) {
    if (!marker) continue;
    if (*marker >= tokens.size()) throw DataError("pooling: special-token index out of bounds");
    if (word_span.contains(*marker)) throw DataError("pooling: special-token index inside the word span");
  }
}

std::vector<double> pairwise_mean(std::span<const std::vector<double>> rows, std::span<const std::size_t> indices) {
  if (indices.empty()) throw DataError("pooling: mean over an empty set");
  const std::size_t dim = rows[indices.front()].size();
  for (std::size_t idx : indices) {
    if (rows[idx].size() != dim) throw DataError("pooling: vectors of unequal dimension");
  }
  std::vector<double> mean(dim);
  pairwise_mean_into(rows, indices, mean);
  return mean;
}

std::vector<double> pool_nc(const TokenizedInstance& instance, NcVariant variant) {
  instance.validate();
  std::vector<std::size_t> indices;
  indices.reserve(instance.word_span.size() + 2);
  if (variant == NcVariant::withcls || variant == NcVariant::all) {
    if (!instance.cls_index) throw DataError("pooling: begin-marker index required");
    indices.push_back(*instance.cls_index);
  }
  for (std::size_t i = instance.word_span.begin; i < instance.word_span.end; ++i) indices.push_back(i);
  if (variant == NcVariant::all) {
    if (!instance.sep_index) throw DataError("pooling: end-marker index required");
    indices.push_back(*instance.sep_index);
  }
  return pairwise_mean(instance.tokens, indices);
}

ContextMean pool_in_context(std::span<const std::vector<double>> instances) {
  if (instances.empty()) throw DataError("pooling: word has no context instances");
  std::vector<std::size_t> indices(instances.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  return {pairwise_mean(instances, indices), instances.size()};
}

std::vector<double> pool_templated(const TokenizedInstance& instance) {
  return pool_nc(instance, NcVariant::nospec);
}

}  // namespace compsem
