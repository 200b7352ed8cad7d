#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace compsem {

/// A compound with its two constituents and human norms.
///
/// `compound == left + right` unless `non_concatenative` is set (spelling change
/// at the seam) or `reversed` is set (then `compound == right + left`).
struct Triplet {
  std::string compound;
  std::string left;
  std::string right;
  double human_lmd = 0.0;  // [0, 10]
  double human_st = 1.0;   // [1, 7]
  bool non_concatenative = false;
  bool reversed = false;

  bool operator==(const Triplet&) const = default;
};

struct Covariates {
  std::string word;
  std::optional<double> concreteness;
  std::optional<std::int64_t> n_instances;
  std::optional<std::int64_t> n_tokens;

  bool operator==(const Covariates&) const = default;
};

struct Exclusion {
  std::string word;
  std::string reason;

  bool operator==(const Exclusion&) const = default;
};

/// Immutable, validated collection of triplets.
class Dataset {
public:
  Dataset() = default;
  Dataset(std::vector<Triplet> triplets, std::map<std::string, Covariates> covariates,
          std::vector<Exclusion> exclusions);

  const std::vector<Triplet>& triplets() const noexcept { return triplets_; }
  const std::map<std::string, Covariates>& covariates() const noexcept { return covariates_; }
  const std::vector<Exclusion>& exclusions() const noexcept { return exclusions_; }
  std::size_t size() const noexcept { return triplets_.size(); }
  bool empty() const noexcept { return triplets_.empty(); }

  const Triplet* find(std::string_view compound) const;
  const Covariates* covariate(std::string_view word) const;

  /// Every compound and constituent, deduplicated.
  std::set<std::string> words() const;

  /// SHA-256 over a canonical serialization; independent of file formatting.
  std::string checksum() const;

  bool operator==(const Dataset&) const = default;

private:
  std::vector<Triplet> triplets_;
  std::map<std::string, Covariates> covariates_;
  std::vector<Exclusion> exclusions_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Maps logical column names onto the header names of a concrete file.
struct ColumnSchema {
  std::string compound = "compound";
  std::string left = "left";
  std::string right = "right";
  std::string lmd = "lmd";
  std::string st = "st";
  std::string non_concatenative = "non_concatenative";
  std::string exclude = "exclude";

  /// Parses "compound=Word,lmd=LMD_mean"; unnamed keys keep their defaults.
  static ColumnSchema parse(std::string_view mapping);
};

struct LoadOptions {
  ColumnSchema schema;
  std::optional<std::filesystem::path> exclusion_sidecar;
};

Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options = {});

/// Sidecar of `word,reason` lines.
std::vector<Exclusion> load_exclusions(const std::filesystem::path& path);

struct CovariateJoin {
  Dataset dataset;
  std::size_t missing_compounds = 0;
  std::vector<std::string> missing_words;  // compounds and constituents, sorted
};

/// Attaches concreteness norms. Unmatched words are counted, never dropped.
CovariateJoin join_covariates(const Dataset& ds, const std::filesystem::path& concreteness_path);

/// Per-word sampled instance counts; each must be in [0, cap].
Dataset with_instance_counts(const Dataset& ds, const std::map<std::string, std::int64_t>& counts,
                             std::int64_t cap);

/// Per-word subword token counts.
Dataset with_token_counts(const Dataset& ds, const std::map<std::string, std::int64_t>& counts);

}  // namespace compsem
