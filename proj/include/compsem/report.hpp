#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "compsem/dataset.hpp"
#include "compsem/embeddings.hpp"
#include "compsem/measures.hpp"
#include "compsem/stats.hpp"

namespace compsem {

inline constexpr const char* kToolVersion = "0.3.0";

/// Provenance block for a run. The checksum covers every field except the timestamp,
/// so artifacts stay byte-identical across reruns with the same inputs.
struct RunManifest {
  std::string dataset_checksum;
  std::string store_provenance;
  std::string setting;
  bool clamp_cosine = false;
  bool include_layer0 = false;
  std::string tool_version = kToolVersion;
  std::string timestamp;

  std::string checksum() const;
  std::string to_json() const;
};

/// Leading comment line every emitted CSV carries.
std::string artifact_header(const RunManifest& manifest);

std::string sweep_csv(const SweepReport& report, const RunManifest& manifest);

struct SummaryCell {
  double value = 0.0;
  std::optional<std::size_t> layer;  // empty for single-vector (static) stores
};

struct SummaryRow {
  std::string label;
  SummaryCell lmd_mae;
  std::optional<SummaryCell> lmd_rho;
  SummaryCell st_mae;
  std::optional<SummaryCell> st_rho;

  bool operator==(const SummaryRow&) const = default;
};

inline bool operator==(const SummaryCell& a, const SummaryCell& b) {
  return a.value == b.value && a.layer == b.layer;
}

struct SummaryTable {
  std::vector<SummaryRow> rows;

  std::string to_csv(const RunManifest& manifest) const;
  /// Aligned columns; values to 6 significant digits with the layer in parentheses.
  std::string to_text() const;
};

/// Best-layer row per labelled report. A report whose only layer is 0 is treated as static.
SummaryTable summary_table(std::span<const std::pair<std::string, SweepReport>> reports);

struct Trajectory {
  std::string compound;
  Target measure = Target::lmd;
  double gold = 0.0;
  std::vector<std::pair<std::size_t, double>> points;  // (layer, predicted), ascending layer
};

Trajectory trajectory(const std::string& compound, const std::map<std::size_t, MeasureTable>& tables,
                      Target measure, double gold);
std::string trajectory_csv(std::span<const Trajectory> series, const RunManifest& manifest);

struct GridCell {
  double alpha = 0.0;
  std::size_t layer = 0;
  EvalResult result;
};

/// Weighted ST evaluated for every (alpha, layer).
std::vector<GridCell> weighted_st_grid(const Dataset& ds, const EmbeddingStore& store,
                                       const RepresentationSetting& setting, const WeightGrid& grid,
                                       const SweepOptions& options = {});
std::string grid_csv(std::span<const GridCell> cells, const RunManifest& manifest);

struct ReversedLayer {
  EvalResult original;
  EvalResult reversed;
  std::optional<double> delta_rho;  // reversed - original
  double delta_mae = 0.0;
};

struct ReversedComparison {
  std::map<std::size_t, ReversedLayer> per_layer;
  std::vector<std::string> skipped;  // non-concatenative, or reversed form absent from the store
};

/// LMD for original vs reversed compounds (the store must hold both forms).
ReversedComparison reversed_comparison(const Dataset& ds, const EmbeddingStore& store,
                                       const RepresentationSetting& setting, const SweepOptions& options = {});
std::string reversed_csv(const ReversedComparison& cmp, const RunManifest& manifest);

std::string regression_csv(const RegressionAnalysis& analysis, const RunManifest& manifest);

}  // namespace compsem
