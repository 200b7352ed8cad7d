#include "compsem/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "compsem/error.hpp"
#include "compsem/util.hpp"

namespace compsem {
namespace {

bool has_whitespace(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
}

void validate_word(std::string_view field, const std::string& word, const std::string& where) {
  if (word.empty()) throw DataError(where + ": field '" + std::string(field) + "' is empty");
  if (has_whitespace(word)) {
    throw DataError(where + ": field '" + std::string(field) + "' contains whitespace: '" + word + "'");
  }
}

void validate_triplet(const Triplet& t, const std::string& where) {
  validate_word("compound", t.compound, where);
  validate_word("left", t.left, where);
  validate_word("right", t.right, where);
  if (!t.non_concatenative) {
    const std::string expected = t.reversed ? t.right + t.left : t.left + t.right;
    if (t.compound != expected) {
      throw DataError(where + ": compound '" + t.compound + "' is not the concatenation of '" + t.left +
                      "' and '" + t.right + "' (flag it non_concatenative if intended)");
    }
  }
  if (!std::isfinite(t.human_lmd) || t.human_lmd < 0.0 || t.human_lmd > 10.0) {
    throw DataError(where + ": field 'lmd' out of range [0,10]: " + format_full(t.human_lmd));
  }
  if (!std::isfinite(t.human_st) || t.human_st < 1.0 || t.human_st > 7.0) {
    throw DataError(where + ": field 'st' out of range [1,7]: " + format_full(t.human_st));
  }
}

bool truthy(std::string_view v) {
  v = trim(v);
  return !v.empty() && v != "0" && v != "false" && v != "FALSE" && v != "no";
}

}  // namespace

Dataset::Dataset(std::vector<Triplet> triplets, std::map<std::string, Covariates> covariates,
                 std::vector<Exclusion> exclusions)
    : triplets_(std::move(triplets)), covariates_(std::move(covariates)), exclusions_(std::move(exclusions)) {
  for (std::size_t i = 0; i < triplets_.size(); ++i) {
    const Triplet& t = triplets_[i];
    validate_triplet(t, "triplet " + std::to_string(i + 1));
    if (!index_.emplace(t.compound, i).second) throw DataError("duplicate compound: " + t.compound);
  }
  std::set<std::string> all = words();
  for (const Exclusion& e : exclusions_) {
    if (all.count(e.word)) throw DataError("excluded word present in triplets: " + e.word);
  }
  for (const auto& [word, cov] : covariates_) {
    if (cov.concreteness && !std::isfinite(*cov.concreteness)) {
      throw DataError("non-finite concreteness for word: " + word);
    }
    if (cov.n_instances && *cov.n_instances < 0) throw DataError("negative instance count for word: " + word);
    if (cov.n_tokens && *cov.n_tokens < 1) throw DataError("token count below 1 for word: " + word);
  }
}

const Triplet* Dataset::find(std::string_view compound) const {
  auto it = index_.find(compound);
  return it == index_.end() ? nullptr : &triplets_[it->second];
}

const Covariates* Dataset::covariate(std::string_view word) const {
  auto it = covariates_.find(std::string(word));
  return it == covariates_.end() ? nullptr : &it->second;
}

std::set<std::string> Dataset::words() const {
  std::set<std::string> out;
  for (const Triplet& t : triplets_) {
    out.insert(t.compound);
    out.insert(t.left);
    out.insert(t.right);
  }
  return out;
}

std::string Dataset::checksum() const {
  std::ostringstream canon;
  for (const Triplet& t : triplets_) {
    canon << "T\t" << t.compound << '\t' << t.left << '\t' << t.right << '\t' << format_full(t.human_lmd) << '\t'
          << format_full(t.human_st) << '\t' << t.non_concatenative << t.reversed << '\n';
  }
  for (const auto& [word, c] : covariates_) {
    canon << "C\t" << word << '\t' << (c.concreteness ? format_full(*c.concreteness) : "-") << '\t'
          << (c.n_instances ? std::to_string(*c.n_instances) : "-") << '\t'
          << (c.n_tokens ? std::to_string(*c.n_tokens) : "-") << '\n';
  }
  for (const Exclusion& e : exclusions_) canon << "X\t" << e.word << '\t' << e.reason << '\n';
  return sha256_hex(canon.str());
}

ColumnSchema ColumnSchema::parse(std::string_view mapping) {
  ColumnSchema schema;
  for (const std::string& item : split_csv_line(mapping)) {
    std::string_view entry = trim(item);
    if (entry.empty()) continue;
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) throw UsageError("column mapping entry lacks '=': " + std::string(entry));
    const std::string key(trim(entry.substr(0, eq)));
    std::string value(trim(entry.substr(eq + 1)));
    if (key == "compound") schema.compound = value;
    else if (key == "left") schema.left = value;
    else if (key == "right") schema.right = value;
    else if (key == "lmd") schema.lmd = value;
    else if (key == "st") schema.st = value;
    else if (key == "non_concatenative") schema.non_concatenative = value;
    else if (key == "exclude") schema.exclude = value;
    else throw UsageError("unknown logical column in mapping: " + key);
  }
  return schema;
}

std::vector<Exclusion> load_exclusions(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<Exclusion> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    std::string word = to_lower_ascii(trim(fields[0]));
    if (word.empty()) throw DataError(path.string() + ":" + std::to_string(line_no) + ": empty excluded word");
    std::string reason;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (i > 1) reason += ',';
      reason += fields[i];
    }
    out.push_back({std::move(word), std::string(trim(reason))});
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options) {
  std::istringstream in(read_file(path));
  const ColumnSchema& schema = options.schema;

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw DataError(path.string() + ": no rows");
  if (!header[0].empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  auto required = [&](const std::string& name) {
    auto idx = column(name);
    if (!idx) throw DataError(path.string() + ": missing required column '" + name + "'");
    return *idx;
  };
  const std::size_t c_compound = required(schema.compound);
  const std::size_t c_left = required(schema.left);
  const std::size_t c_right = required(schema.right);
  const std::size_t c_lmd = required(schema.lmd);
  const std::size_t c_st = required(schema.st);
  const auto c_nonconcat = column(schema.non_concatenative);
  const auto c_exclude = column(schema.exclude);

  std::vector<Exclusion> exclusions;
  std::map<std::string, std::string> excluded;  // word -> reason
  if (options.exclusion_sidecar) {
    for (Exclusion& e : load_exclusions(*options.exclusion_sidecar)) {
      if (excluded.emplace(e.word, e.reason).second) exclusions.push_back(std::move(e));
    }
  }

  struct Row {
    std::size_t line_no;
    std::vector<std::string> fields;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    rows.push_back({line_no, split_csv_line(line)});
  }
  if (rows.empty()) throw DataError(path.string() + ": no rows");

  // Exclusions from the column are collected first so they apply to constituents of earlier rows too.
  for (const Row& row : rows) {
    if (c_exclude && *c_exclude < row.fields.size() && truthy(row.fields[*c_exclude])) {
      if (c_compound >= row.fields.size()) continue;
      std::string word = to_lower_ascii(trim(row.fields[c_compound]));
      std::string value(trim(row.fields[*c_exclude]));
      std::string reason = value == "1" || value == "true" ? std::string("excluded in dataset") : value;
      if (excluded.emplace(word, reason).second) exclusions.push_back({word, reason});
    }
  }

  std::vector<Triplet> triplets;
  std::set<std::string> seen;
  for (const Row& row : rows) {
    const std::string where = path.string() + ": row " + std::to_string(row.line_no);
    auto field = [&](std::size_t idx, std::string_view name) -> std::string_view {
      if (idx >= row.fields.size()) throw DataError(where + ": missing field '" + std::string(name) + "'");
      return trim(row.fields[idx]);
    };
    Triplet t;
    t.compound = to_lower_ascii(field(c_compound, "compound"));
    t.left = to_lower_ascii(field(c_left, "left"));
    t.right = to_lower_ascii(field(c_right, "right"));
    if (excluded.count(t.compound) || excluded.count(t.left) || excluded.count(t.right)) continue;

    if (!parse_double(field(c_lmd, "lmd"), t.human_lmd)) {
      throw DataError(where + ": field 'lmd' is not a number: '" + std::string(field(c_lmd, "lmd")) + "'");
    }
    if (!parse_double(field(c_st, "st"), t.human_st)) {
      throw DataError(where + ": field 'st' is not a number: '" + std::string(field(c_st, "st")) + "'");
    }
    if (c_nonconcat && *c_nonconcat < row.fields.size()) {
      std::string_view v = trim(row.fields[*c_nonconcat]);
      if (v == "1") t.non_concatenative = true;
      else if (!v.empty() && v != "0") {
        throw DataError(where + ": field 'non_concatenative' must be 0 or 1, got '" + std::string(v) + "'");
      }
    }
    validate_triplet(t, where);
    if (!seen.insert(t.compound).second) throw DataError(where + ": duplicate compound '" + t.compound + "'");
    triplets.push_back(std::move(t));
  }
  return Dataset(std::move(triplets), {}, std::move(exclusions));
}

CovariateJoin join_covariates(const Dataset& ds, const std::filesystem::path& concreteness_path) {
  std::istringstream in(read_file(concreteness_path));
  std::map<std::string, double> norms;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = trim(line);
    if (text.empty()) continue;
    std::string word;
    std::string value;
    if (auto comma = text.rfind(','); comma != std::string_view::npos) {
      word = std::string(trim(text.substr(0, comma)));
      value = std::string(trim(text.substr(comma + 1)));
    } else {
      auto sep = text.find_last_of(" \t");
      if (sep == std::string_view::npos) {
        throw DataError(concreteness_path.string() + ":" + std::to_string(line_no) + ": expected 'word value'");
      }
      word = std::string(trim(text.substr(0, sep)));
      value = std::string(trim(text.substr(sep + 1)));
    }
    double v = 0.0;
    const bool numeric = parse_double(value, v) && std::isfinite(v);
    if (!numeric) {
      if (first_content) {  // header line
        first_content = false;
        continue;
      }
      throw DataError(concreteness_path.string() + ":" + std::to_string(line_no) +
                      ": non-numeric concreteness value '" + value + "'");
    }
    first_content = false;
    word = to_lower_ascii(word);
    auto [it, inserted] = norms.emplace(word, v);
    if (!inserted && it->second != v) {
      throw DataError(concreteness_path.string() + ":" + std::to_string(line_no) + ": conflicting values for '" +
                      word + "'");
    }
  }

  auto covariates = ds.covariates();
  CovariateJoin out;
  for (const std::string& word : ds.words()) {
    auto it = norms.find(word);
    if (it == norms.end()) {
      out.missing_words.push_back(word);
      continue;
    }
    Covariates& c = covariates[word];
    c.word = word;
    c.concreteness = it->second;
  }
  for (const Triplet& t : ds.triplets()) {
    if (!norms.count(t.compound)) ++out.missing_compounds;
  }
  out.dataset = Dataset(ds.triplets(), std::move(covariates), ds.exclusions());
  return out;
}

Dataset with_instance_counts(const Dataset& ds, const std::map<std::string, std::int64_t>& counts,
                             std::int64_t cap) {
  auto covariates = ds.covariates();
  for (const auto& [word, n] : counts) {
    if (n < 0 || n > cap) {
      throw DataError("instance count for '" + word + "' outside [0," + std::to_string(cap) +
                      "]: " + std::to_string(n));
    }
    Covariates& c = covariates[word];
    c.word = word;
    c.n_instances = n;
  }
  return Dataset(ds.triplets(), std::move(covariates), ds.exclusions());
}

Dataset with_token_counts(const Dataset& ds, const std::map<std::string, std::int64_t>& counts) {
  auto covariates = ds.covariates();
  for (const auto& [word, n] : counts) {
    Covariates& c = covariates[word];
    c.word = word;
    c.n_tokens = n;
  }
  return Dataset(ds.triplets(), std::move(covariates), ds.exclusions());
}

}  // namespace compsem
