#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace compsem {

inline constexpr std::string_view kTemplateSlot = "<word>";

struct SamplePlan {
  std::size_t cap = 100;
  std::uint64_t seed = 0;
  bool shuffle = false;    // false: keep the first `cap` matches in corpus order
  std::size_t shards = 1;  // parallel scan; output does not depend on it
};

struct WordSample {
  std::vector<std::string> sentences;  // distinct, corpus order, at most `cap`
  std::size_t n_matched_total = 0;     // distinct matching sentences before capping

  bool operator==(const WordSample&) const = default;
};

using SampleMap = std::map<std::string, WordSample>;

/// Byte range of one word in a sentence.
struct WordSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const WordSpan&) const = default;
};

/// Word segmentation: runs of letters/digits, joined across an apostrophe or
/// period that sits between two letters (or a comma/period between digits).
std::vector<WordSpan> segment_words(std::string_view sentence);

/// First whole-word, case-folded occurrence of `word` in `sentence`.
std::optional<WordSpan> find_whole_word(std::string_view sentence, std::string_view word);

/// For every word, up to `plan.cap` distinct sentences containing it as a whole word.
/// Words with zero matches are present with an empty list.
SampleMap sample_sentences(const std::filesystem::path& corpus_path, const std::set<std::string>& words,
                           const SamplePlan& plan);

/// JSONL, one `{word, sentences, n_matched_total}` object per line, sorted by word.
std::string samples_to_jsonl(const SampleMap& samples);
SampleMap samples_from_jsonl(std::string_view text);

/// Replaces the single `<word>` slot; throws DataError for zero or multiple slots.
std::string instantiate_template(std::string_view tmpl, std::string_view word);
std::size_t count_slots(std::string_view tmpl);

}  // namespace compsem
