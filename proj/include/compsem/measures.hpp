#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "compsem/dataset.hpp"
#include "compsem/embeddings.hpp"

namespace compsem {

/// Cosine similarity in 64-bit, clamped to [-1, 1]. Throws DataError for a zero-norm vector.
double cosine(std::span<const double> u, std::span<const double> v);
double cosine(std::span<const float> u, std::span<const float> v);

/// L = cos(left, compound), R = cos(right, compound).
struct SimilarityPair {
  double left = 0.0;
  double right = 0.0;
  std::size_t layer = 1;
};

/// 5(R - L) + 5
double lmd(const SimilarityPair& pair);
/// 6(L + R)/2 + 1
double st(const SimilarityPair& pair);
/// 6(alpha*L + (1 - alpha)*R) + 1, alpha being the left constituent's weight.
double st_weighted(const SimilarityPair& pair, double alpha);

struct WeightGrid {
  std::vector<double> weights;

  /// 0.0, 0.1, ..., 1.0
  static WeightGrid standard();
  void validate() const;
};

struct MeasureRow {
  double left_sim = 0.0;
  double right_sim = 0.0;
  double lmd_pred = 0.0;
  double st_pred = 0.0;

  SimilarityPair pair(std::size_t layer) const { return {left_sim, right_sim, layer}; }
  bool operator==(const MeasureRow&) const = default;
};

struct TableMiss {
  std::string compound;
  std::vector<std::string> missing_words;

  bool operator==(const TableMiss&) const = default;
};

struct MeasureOptions {
  bool clamp_cosine = false;  // clamp L and R to [0, 1] before the formulas
};

/// Predicted measures for one (setting, layer). Layer 0 denotes a static store.
struct MeasureTable {
  RepresentationSetting setting;
  std::size_t layer = 0;
  std::string setting_label;  // "static" for a StaticStore, otherwise setting.descriptor()
  std::map<std::string, MeasureRow> rows;
  std::vector<TableMiss> misses;
  std::size_t range_violations = 0;  // rows with a negative raw cosine

  std::size_t effective_n() const noexcept { return rows.size(); }
};

MeasureTable compute_table(const Dataset& ds, const EmbeddingStore& store, const RepresentationSetting& setting,
                           std::size_t layer, const MeasureOptions& options = {});
MeasureTable compute_table(const Dataset& ds, const StaticStore& store, const MeasureOptions& options = {});

struct ReversedDataset {
  Dataset dataset;
  std::vector<std::string> skipped;  // non-concatenative compounds, for which reversal is undefined
};

/// Replaces each compound by the right+left string, keeping constituent roles and human norms.
/// Applying it twice restores the original for concatenative triplets.
ReversedDataset reverse_compounds(const Dataset& ds);

/// CSV with header compound,layer,setting,L,R,lmd_pred,st_pred (full precision).
std::string measure_tables_csv(std::span<const MeasureTable> tables);
std::vector<MeasureTable> parse_measure_tables_csv(std::string_view text);

}  // namespace compsem
