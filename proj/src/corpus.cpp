#include "compsem/corpus.hpp"

#include <algorithm>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "compsem/error.hpp"
#include "compsem/util.hpp"

namespace compsem {
namespace {

enum class CharClass { letter, digit, joiner_letter, joiner_digit, joiner_both, other };

struct CodePoint {
  char32_t value;
  std::size_t length;
};

CodePoint decode_utf8(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> unsigned {
    if (i + k >= s.size()) return 0x100;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : 0x100;
  };
  if (b0 < 0x80) return {b0, 1};
  if ((b0 & 0xE0) == 0xC0) {
    unsigned c1 = cont(1);
    if (c1 <= 0x3F) return {static_cast<char32_t>(((b0 & 0x1F) << 6) | c1), 2};
  } else if ((b0 & 0xF0) == 0xE0) {
    unsigned c1 = cont(1), c2 = cont(2);
    if (c1 <= 0x3F && c2 <= 0x3F) return {static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2), 3};
  } else if ((b0 & 0xF8) == 0xF0) {
    unsigned c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 <= 0x3F && c2 <= 0x3F && c3 <= 0x3F) {
      return {static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3), 4};
    }
  }
  return {0xFFFD, 1};  // invalid byte: treated as a separator
}

CharClass classify(char32_t c) {
  if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') return CharClass::letter;
  if (c >= '0' && c <= '9') return CharClass::digit;
  if (c == '\'' || c == 0x2019 || c == 0x2018) return CharClass::joiner_both;
  if (c == '.') return CharClass::joiner_both;
  if (c == ':' || c == 0x00B7) return CharClass::joiner_letter;
  if (c == ',' || c == ';') return CharClass::joiner_digit;
  if (c < 0x80) return CharClass::other;
  // Punctuation and symbol blocks; everything else above ASCII is taken as a letter.
  if (c <= 0xBF || c == 0xD7 || c == 0xF7 || c == 0xFFFD) return CharClass::other;
  if (c >= 0x2000 && c <= 0x2BFF) return CharClass::other;
  if (c >= 0x3000 && c <= 0x303F) return CharClass::other;
  if (c >= 0xFE30 && c <= 0xFE4F) return CharClass::other;
  if (c >= 0xFF00 && c <= 0xFF0F) return CharClass::other;
  if (c >= 0xFF1A && c <= 0xFF20) return CharClass::other;
  return CharClass::letter;
}

bool is_word_char(CharClass k) { return k == CharClass::letter || k == CharClass::digit; }

bool ascii_fold_equal(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    char x = a[i], y = b[i];
    if (x >= 'A' && x <= 'Z') x = static_cast<char>(x - 'A' + 'a');
    if (y >= 'A' && y <= 'Z') y = static_cast<char>(y - 'A' + 'a');
    if (x != y) return false;
  }
  return true;
}

struct Match {
  std::size_t position;  // byte offset of the line in the corpus
  std::string_view sentence;
};

// Scans [begin, end) of `text`, which must start at a line boundary.
void scan_shard(std::string_view text, std::size_t begin, std::size_t end, const std::set<std::string>& words,
                std::map<std::string, std::vector<Match>>& out) {
  std::size_t pos = begin;
  while (pos < end) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) {
      std::set<std::string> seen_in_line;
      for (const WordSpan& w : segment_words(line)) {
        std::string folded = to_lower_ascii(line.substr(w.begin, w.end - w.begin));
        if (words.count(folded) && seen_in_line.insert(folded).second) {
          out[folded].push_back({pos, line});
        }
      }
    }
    pos = eol + 1;
  }
}

// Uniform draw in [0, bound) by rejection; fixed output for a given engine state on every platform.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

std::vector<WordSpan> segment_words(std::string_view sentence) {
  struct Unit {
    std::size_t begin, end;
    CharClass cls;
  };
  std::vector<Unit> units;
  for (std::size_t i = 0; i < sentence.size();) {
    CodePoint cp = decode_utf8(sentence, i);
    units.push_back({i, i + cp.length, classify(cp.value)});
    i += cp.length;
  }

  std::vector<WordSpan> words;
  std::size_t u = 0;
  while (u < units.size()) {
    if (!is_word_char(units[u].cls)) {
      ++u;
      continue;
    }
    const std::size_t start = units[u].begin;
    std::size_t last = u;
    std::size_t k = u + 1;
    while (k < units.size()) {
      if (is_word_char(units[k].cls)) {
        last = k++;
        continue;
      }
      const CharClass j = units[k].cls;
      if (k + 1 < units.size() && is_word_char(units[k + 1].cls)) {
        const CharClass before = units[last].cls;
        const CharClass after = units[k + 1].cls;
        const bool letters = before == CharClass::letter && after == CharClass::letter;
        const bool digits = before == CharClass::digit && after == CharClass::digit;
        if ((letters && (j == CharClass::joiner_letter || j == CharClass::joiner_both)) ||
            (digits && (j == CharClass::joiner_digit || j == CharClass::joiner_both))) {
          last = k + 1;
          k += 2;
          continue;
        }
      }
      break;
    }
    words.push_back({start, units[last].end});
    u = last + 1;
  }
  return words;
}

std::optional<WordSpan> find_whole_word(std::string_view sentence, std::string_view word) {
  for (const WordSpan& w : segment_words(sentence)) {
    if (ascii_fold_equal(sentence.substr(w.begin, w.end - w.begin), word)) return w;
  }
  return std::nullopt;
}

SampleMap sample_sentences(const std::filesystem::path& corpus_path, const std::set<std::string>& words,
                           const SamplePlan& plan) {
  if (plan.cap < 1) throw UsageError("sample plan: cap must be at least 1");
  const std::string text = read_file(corpus_path);
  const std::string_view view(text);

  std::set<std::string> folded;
  for (const std::string& w : words) folded.insert(to_lower_ascii(w));

  const std::size_t n_shards = std::max<std::size_t>(1, std::min(plan.shards, std::max<std::size_t>(1, text.size())));
  std::vector<std::size_t> bounds{0};
  for (std::size_t s = 1; s < n_shards; ++s) {
    std::size_t b = std::max(bounds.back(), text.size() * s / n_shards);
    if (b > 0 && b < text.size()) {
      std::size_t nl = view.find('\n', b - 1);
      b = nl == std::string_view::npos ? text.size() : nl + 1;
    }
    bounds.push_back(std::min(b, text.size()));
  }
  bounds.push_back(text.size());

  std::vector<std::map<std::string, std::vector<Match>>> partial(n_shards);
  {
    std::vector<std::jthread> workers;
    for (std::size_t s = 0; s < n_shards; ++s) {
      if (bounds[s] >= bounds[s + 1]) continue;
      workers.emplace_back([&, s] { scan_shard(view, bounds[s], bounds[s + 1], folded, partial[s]); });
    }
  }

  SampleMap out;
  for (const std::string& w : folded) {
    std::vector<Match> matches;
    for (auto& shard : partial) {
      auto it = shard.find(w);
      if (it != shard.end()) matches.insert(matches.end(), it->second.begin(), it->second.end());
    }
    std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) { return a.position < b.position; });

    std::vector<Match> distinct;
    std::set<std::string_view> seen;
    for (const Match& m : matches) {
      if (seen.insert(m.sentence).second) distinct.push_back(m);
    }

    WordSample sample;
    sample.n_matched_total = distinct.size();
    if (plan.shuffle && distinct.size() > plan.cap) {
      std::mt19937_64 rng(plan.seed);
      for (std::size_t i = distinct.size() - 1; i > 0; --i) {
        std::swap(distinct[i], distinct[draw_below(rng, i + 1)]);
      }
      distinct.resize(plan.cap);
      std::sort(distinct.begin(), distinct.end(),
                [](const Match& a, const Match& b) { return a.position < b.position; });
    } else if (distinct.size() > plan.cap) {
      distinct.resize(plan.cap);
    }
    for (const Match& m : distinct) sample.sentences.emplace_back(m.sentence);
    out.emplace(w, std::move(sample));
  }
  return out;
}

std::string samples_to_jsonl(const SampleMap& samples) {
  std::string out;
  for (const auto& [word, sample] : samples) {
    nlohmann::ordered_json j;
    j["word"] = word;
    j["sentences"] = sample.sentences;
    j["n_matched_total"] = sample.n_matched_total;
    out += j.dump();
    out += '\n';
  }
  return out;
}

SampleMap samples_from_jsonl(std::string_view text) {
  SampleMap out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      WordSample s;
      s.sentences = j.at("sentences").get<std::vector<std::string>>();
      s.n_matched_total = j.value("n_matched_total", s.sentences.size());
      out[to_lower_ascii(j.at("word").get<std::string>())] = std::move(s);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("samples line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::size_t count_slots(std::string_view tmpl) {
  std::size_t n = 0;
  for (std::size_t pos = tmpl.find(kTemplateSlot); pos != std::string_view::npos;
       pos = tmpl.find(kTemplateSlot, pos + kTemplateSlot.size())) {
    ++n;
  }
  return n;
}

std::string instantiate_template(std::string_view tmpl, std::string_view word) {
  const std::size_t n = count_slots(tmpl);
  if (n != 1) {
    throw DataError("template must contain exactly one " + std::string(kTemplateSlot) + " slot, found " +
                    std::to_string(n));
  }
  const std::size_t pos = tmpl.find(kTemplateSlot);
  std::string out;
  out.reserve(tmpl.size() + word.size());
  out.append(tmpl.substr(0, pos));
  out.append(word);
  out.append(tmpl.substr(pos + kTemplateSlot.size()));
  return out;
}

}  // namespace compsem
