#include "compsem/report.hpp"

#include <algorithm>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "compsem/error.hpp"
#include "compsem/util.hpp"

namespace compsem {
namespace {

nlohmann::ordered_json manifest_fields(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["dataset_checksum"] = m.dataset_checksum;
  j["store_provenance"] = m.store_provenance;
  j["setting"] = m.setting;
  j["clamp_cosine"] = m.clamp_cosine;
  j["include_layer0"] = m.include_layer0;
  j["tool_version"] = m.tool_version;
  return j;
}

std::string rho_text(const std::optional<double>& rho) { return rho ? format_full(*rho) : "NA"; }

std::string cell_text(const SummaryCell& c) {
  std::string s = format_sig6(c.value);
  if (c.layer) s += " (" + std::to_string(*c.layer) + ")";
  return s;
}

std::string layer_text(const std::optional<std::size_t>& layer) { return layer ? std::to_string(*layer) : ""; }

}  // namespace

std::string RunManifest::checksum() const { return sha256_hex(manifest_fields(*this).dump()); }

std::string RunManifest::to_json() const {
  auto j = manifest_fields(*this);
  j["manifest_sha256"] = checksum();
  j["timestamp"] = timestamp;
  return j.dump(2) + "\n";
}

std::string artifact_header(const RunManifest& manifest) {
  return "# manifest_sha256=" + manifest.checksum() + "\n";
}

std::string sweep_csv(const SweepReport& report, const RunManifest& manifest) {
  std::string out = artifact_header(manifest) + "layer,measure,mae,rho,n\n";
  for (const auto& [layer, ev] : report.per_layer) {
    for (const auto& [name, r] : {std::pair<const char*, const EvalResult&>{"lmd", ev.lmd}, {"st", ev.st}}) {
      out += std::to_string(layer) + ',' + name + ',' + format_full(r.mae) + ',' + rho_text(r.spearman_rho) + ',' +
             std::to_string(r.n) + '\n';
    }
  }
  return out;
}

SummaryTable summary_table(std::span<const std::pair<std::string, SweepReport>> reports) {
  if (reports.empty()) throw UsageError("summary table needs at least one report");
  SummaryTable table;
  for (const auto& [label, rep] : reports) {
    const bool is_static = rep.per_layer.size() == 1 && rep.per_layer.begin()->first == 0;
    auto cell = [&](std::size_t layer, double value) {
      return SummaryCell{value, is_static ? std::nullopt : std::optional<std::size_t>(layer)};
    };
    SummaryRow row;
    row.label = label;
    row.lmd_mae = cell(rep.best_lmd_mae_layer, rep.per_layer.at(rep.best_lmd_mae_layer).lmd.mae);
    row.st_mae = cell(rep.best_st_mae_layer, rep.per_layer.at(rep.best_st_mae_layer).st.mae);
    if (rep.best_lmd_layer) row.lmd_rho = cell(*rep.best_lmd_layer, *rep.per_layer.at(*rep.best_lmd_layer).lmd.spearman_rho);
    if (rep.best_st_layer) row.st_rho = cell(*rep.best_st_layer, *rep.per_layer.at(*rep.best_st_layer).st.spearman_rho);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string SummaryTable::to_csv(const RunManifest& manifest) const {
  std::string out = artifact_header(manifest) +
                    "label,lmd_mae,lmd_mae_layer,lmd_rho,lmd_rho_layer,st_mae,st_mae_layer,st_rho,st_rho_layer\n";
  auto opt = [](const std::optional<SummaryCell>& c) {
    return c ? format_full(c->value) + ',' + layer_text(c->layer) : std::string("NA,");
  };
  for (const SummaryRow& r : rows) {
    out += csv_escape(r.label) + ',' + format_full(r.lmd_mae.value) + ',' + layer_text(r.lmd_mae.layer) + ',' +
           opt(r.lmd_rho) + ',' + format_full(r.st_mae.value) + ',' + layer_text(r.st_mae.layer) + ',' + opt(r.st_rho) +
           '\n';
  }
  return out;
}

std::string SummaryTable::to_text() const {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"model", "LMD MAE", "LMD rho", "ST MAE", "ST rho"});
  for (const SummaryRow& r : rows) {
    cells.push_back({r.label, cell_text(r.lmd_mae), r.lmd_rho ? cell_text(*r.lmd_rho) : "NA", cell_text(r.st_mae),
                     r.st_rho ? cell_text(*r.st_rho) : "NA"});
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      line += row[c];
      if (c + 1 < row.size()) line.append(width[c] - row[c].size(), ' ');
    }
    out += line + '\n';
  }
  return out;
}

Trajectory trajectory(const std::string& compound, const std::map<std::size_t, MeasureTable>& tables,
                      Target measure, double gold) {
  Trajectory t{compound, measure, gold, {}};
  for (const auto& [layer, table] : tables) {
    auto it = table.rows.find(compound);
    if (it == table.rows.end()) {
      throw DataError("trajectory: compound '" + compound + "' missing at layer " + std::to_string(layer));
    }
    t.points.emplace_back(layer, measure == Target::lmd ? it->second.lmd_pred : it->second.st_pred);
  }
  return t;
}

std::string trajectory_csv(std::span<const Trajectory> series, const RunManifest& manifest) {
  std::string out = artifact_header(manifest) + "compound,measure,layer,predicted,gold\n";
  for (const Trajectory& t : series) {
    const char* name = t.measure == Target::lmd ? "lmd" : "st";
    for (const auto& [layer, value] : t.points) {
      out += csv_escape(t.compound) + ',' + name + ',' + std::to_string(layer) + ',' + format_full(value) + ',' +
             format_full(t.gold) + '\n';
    }
  }
  return out;
}

std::vector<GridCell> weighted_st_grid(const Dataset& ds, const EmbeddingStore& store,
                                       const RepresentationSetting& setting, const WeightGrid& grid,
                                       const SweepOptions& options) {
  grid.validate();
  std::map<std::size_t, MeasureTable> tables;
  for (std::size_t layer : sweep_layers(store, options)) {
    tables.emplace(layer, compute_table(ds, store, setting, layer, options.measure));
  }
  std::vector<GridCell> cells;
  for (double alpha : grid.weights) {
    for (const auto& [layer, table] : tables) {
      std::vector<double> pred, gold;
      for (const auto& [compound, row] : table.rows) {
        pred.push_back(st_weighted(row.pair(layer), alpha));
        gold.push_back(ds.find(compound)->human_st);
      }
      cells.push_back({alpha, layer, evaluate_values(pred, gold)});
    }
  }
  return cells;
}

std::string grid_csv(std::span<const GridCell> cells, const RunManifest& manifest) {
  std::string out = artifact_header(manifest) + "alpha,layer,mae,rho,n\n";
  for (const GridCell& c : cells) {
    out += format_full(c.alpha) + ',' + std::to_string(c.layer) + ',' + format_full(c.result.mae) + ',' +
           rho_text(c.result.spearman_rho) + ',' + std::to_string(c.result.n) + '\n';
  }
  return out;
}

ReversedComparison reversed_comparison(const Dataset& ds, const EmbeddingStore& store,
                                       const RepresentationSetting& setting, const SweepOptions& options) {
  ReversedComparison cmp;
  std::vector<Triplet> kept;
  for (const Triplet& t : ds.triplets()) {
    if (t.non_concatenative) {
      cmp.skipped.push_back(t.compound);
      continue;
    }
    const std::string reversed = t.reversed ? t.left + t.right : t.right + t.left;
    if (!store.find(reversed) || ds.find(reversed)) {
      cmp.skipped.push_back(t.compound);
      continue;
    }
    kept.push_back(t);
  }
  if (kept.size() < 2) throw DataError("reversed analysis: fewer than two compounds with reversed forms in store");
  const Dataset original(std::move(kept), ds.covariates(), {});
  const Dataset reversed = reverse_compounds(original).dataset;

  for (std::size_t layer : sweep_layers(store, options)) {
    const MeasureTable t_orig = compute_table(original, store, setting, layer, options.measure);
    const MeasureTable t_rev = compute_table(reversed, store, setting, layer, options.measure);
    // Restrict both to triplets that survived in each table.
    std::vector<double> po, pr, gold;
    for (const Triplet& t : original.triplets()) {
      const std::string rev = t.reversed ? t.left + t.right : t.right + t.left;
      auto a = t_orig.rows.find(t.compound);
      auto b = t_rev.rows.find(rev);
      if (a == t_orig.rows.end() || b == t_rev.rows.end()) continue;
      po.push_back(a->second.lmd_pred);
      pr.push_back(b->second.lmd_pred);
      gold.push_back(t.human_lmd);
    }
    ReversedLayer rl;
    rl.original = evaluate_values(po, gold);
    rl.reversed = evaluate_values(pr, gold);
    if (rl.original.spearman_rho && rl.reversed.spearman_rho) {
      rl.delta_rho = *rl.reversed.spearman_rho - *rl.original.spearman_rho;
    }
    rl.delta_mae = rl.reversed.mae - rl.original.mae;
    cmp.per_layer.emplace(layer, rl);
  }
  return cmp;
}

std::string reversed_csv(const ReversedComparison& cmp, const RunManifest& manifest) {
  std::string out =
      artifact_header(manifest) + "layer,original_mae,original_rho,reversed_mae,reversed_rho,delta_mae,delta_rho,n\n";
  for (const auto& [layer, r] : cmp.per_layer) {
    out += std::to_string(layer) + ',' + format_full(r.original.mae) + ',' + rho_text(r.original.spearman_rho) + ',' +
           format_full(r.reversed.mae) + ',' + rho_text(r.reversed.spearman_rho) + ',' + format_full(r.delta_mae) + ',' +
           rho_text(r.delta_rho) + ',' + std::to_string(r.original.n) + '\n';
  }
  return out;
}

std::string regression_csv(const RegressionAnalysis& analysis, const RunManifest& manifest) {
  std::string out = artifact_header(manifest) + "predictor,estimate,std_error,t,p\n";
  auto line = [](const std::string& name, const Coefficient& c) {
    return name + ',' + format_full(c.estimate) + ',' + format_full(c.std_error) + ',' + format_full(c.t_stat) + ',' +
           format_full(c.p_value) + '\n';
  };
  if (analysis.result.intercept) out += line("(intercept)", *analysis.result.intercept);
  for (const auto& [name, c] : analysis.result.coefficients) out += line(name, c);
  return out;
}

}  // namespace compsem
