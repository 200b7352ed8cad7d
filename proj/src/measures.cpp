#include "compsem/measures.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <sstream>

#include "compsem/error.hpp"
#include "compsem/util.hpp"

namespace compsem {
namespace {

template <typename T>
double cosine_impl(std::span<const T> u, std::span<const T> v) {
  if (u.size() != v.size()) throw DataError("cosine: vectors of unequal dimension");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i];
    const double b = v[i];
    dot += a * b;
    nu += a * a;
    nv += b * b;
  }
  if (nu == 0.0 || nv == 0.0) throw DataError("cosine: zero-norm vector");
  // sqrt(nu * nv) keeps cos(u, u) == 1 exactly; split the root only if the product leaves the normal range.
  const double prod = nu * nv;
  const double denom = std::isfinite(prod) && prod >= DBL_MIN ? std::sqrt(prod) : std::sqrt(nu) * std::sqrt(nv);
  return std::clamp(dot / denom, -1.0, 1.0);
}

template <typename Lookup>
MeasureTable fill_table(const Dataset& ds, Lookup&& lookup, const MeasureOptions& options, MeasureTable table) {
  for (const Triplet& t : ds.triplets()) {
    auto c = lookup(t.compound);
    auto l = lookup(t.left);
    auto r = lookup(t.right);
    if (!c || !l || !r) {
      TableMiss miss{t.compound, {}};
      if (!c) miss.missing_words.push_back(t.compound);
      if (!l) miss.missing_words.push_back(t.left);
      if (!r && t.right != t.left) miss.missing_words.push_back(t.right);
      table.misses.push_back(std::move(miss));
      continue;
    }
    MeasureRow row;
    row.left_sim = cosine(*l, *c);
    row.right_sim = cosine(*r, *c);
    if (row.left_sim < 0.0 || row.right_sim < 0.0) ++table.range_violations;
    if (options.clamp_cosine) {
      row.left_sim = std::clamp(row.left_sim, 0.0, 1.0);
      row.right_sim = std::clamp(row.right_sim, 0.0, 1.0);
    }
    const SimilarityPair pair = row.pair(table.layer);
    row.lmd_pred = lmd(pair);
    row.st_pred = st(pair);
    table.rows.emplace(t.compound, row);
  }
  if (table.rows.empty()) throw DataError("no triplet has all three words in the store");
  return table;
}

}  // namespace

double cosine(std::span<const double> u, std::span<const double> v) { return cosine_impl(u, v); }
double cosine(std::span<const float> u, std::span<const float> v) { return cosine_impl(u, v); }

double lmd(const SimilarityPair& pair) { return 5.0 * (pair.right - pair.left) + 5.0; }

double st(const SimilarityPair& pair) { return 6.0 * (pair.left + pair.right) / 2.0 + 1.0; }

double st_weighted(const SimilarityPair& pair, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DataError("weighted ST: alpha outside [0,1]");
  return 6.0 * (alpha * pair.left + (1.0 - alpha) * pair.right) + 1.0;
}

WeightGrid WeightGrid::standard() {
  WeightGrid grid;
  for (int i = 0; i <= 10; ++i) grid.weights.push_back(i / 10.0);
  return grid;
}

void WeightGrid::validate() const {
  if (weights.empty()) throw UsageError("weight grid is empty");
  for (double w : weights) {
    if (!(w >= 0.0 && w <= 1.0)) throw UsageError("weight outside [0,1]: " + format_full(w));
  }
}

MeasureTable compute_table(const Dataset& ds, const EmbeddingStore& store, const RepresentationSetting& setting,
                           std::size_t layer, const MeasureOptions& options) {
  if (setting != store.setting()) {
    throw DataError("setting " + setting.descriptor() + " does not match store setting " +
                    store.setting().descriptor());
  }
  if (layer > store.n_layers() || (layer == 0 && !store.has_layer0())) {
    throw DataError("layer " + std::to_string(layer) + " not present in store (" + std::to_string(store.n_layers()) +
                    " layers)");
  }
  MeasureTable table;
  table.setting = setting;
  table.layer = layer;
  table.setting_label = setting.descriptor();
  auto lookup = [&](const std::string& word) -> std::optional<std::span<const float>> {
    const LayeredEmbedding* e = store.find(word);
    if (!e) return std::nullopt;
    return e->layer(layer);
  };
  return fill_table(ds, lookup, options, std::move(table));
}

MeasureTable compute_table(const Dataset& ds, const StaticStore& store, const MeasureOptions& options) {
  MeasureTable table;
  table.layer = 0;
  table.setting_label = "static";
  auto lookup = [&](const std::string& word) { return store.find(word); };
  return fill_table(ds, lookup, options, std::move(table));
}

ReversedDataset reverse_compounds(const Dataset& ds) {
  ReversedDataset out;
  std::vector<Triplet> triplets;
  for (const Triplet& t : ds.triplets()) {
    if (t.non_concatenative) {
      out.skipped.push_back(t.compound);
      continue;
    }
    Triplet r = t;
    r.reversed = !t.reversed;
    r.compound = r.reversed ? t.right + t.left : t.left + t.right;
    triplets.push_back(std::move(r));
  }
  // A reversal can collide with another compound (e.g. both "ab" and "ba" listed); keep the first.
  std::vector<Triplet> unique;
  std::set<std::string> seen;
  for (Triplet& t : triplets) {
    if (seen.insert(t.compound).second) unique.push_back(std::move(t));
    else out.skipped.push_back(t.compound);
  }
  out.dataset = Dataset(std::move(unique), ds.covariates(), {});
  return out;
}

std::string measure_tables_csv(std::span<const MeasureTable> tables) {
  std::string out = "compound,layer,setting,L,R,lmd_pred,st_pred\n";
  for (const MeasureTable& t : tables) {
    for (const auto& [compound, row] : t.rows) {
      out += csv_escape(compound) + ',' + std::to_string(t.layer) + ',' + csv_escape(t.setting_label) + ',' +
             format_full(row.left_sim) + ',' + format_full(row.right_sim) + ',' + format_full(row.lmd_pred) + ',' +
             format_full(row.st_pred) + '\n';
    }
  }
  return out;
}

std::vector<MeasureTable> parse_measure_tables_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::map<std::pair<std::size_t, std::string>, MeasureTable> tables;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line.front() == '#') continue;
    auto f = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      if (f.size() != 7 || f[0] != "compound") throw DataError("measure CSV: unexpected header");
      continue;
    }
    const std::string where = "measure CSV line " + std::to_string(line_no);
    if (f.size() != 7) throw DataError(where + ": expected 7 fields");
    std::int64_t layer = 0;
    MeasureRow row;
    if (!parse_int64(f[1], layer) || layer < 0 || !parse_double(f[3], row.left_sim) ||
        !parse_double(f[4], row.right_sim) || !parse_double(f[5], row.lmd_pred) || !parse_double(f[6], row.st_pred)) {
      throw DataError(where + ": malformed number");
    }
    auto key = std::make_pair(static_cast<std::size_t>(layer), f[2]);
    auto it = tables.find(key);
    if (it == tables.end()) {
      MeasureTable t;
      t.layer = key.first;
      t.setting_label = f[2];
      if (f[2] != "static") t.setting = RepresentationSetting::from_descriptor(f[2]);
      it = tables.emplace(key, std::move(t)).first;
    }
    if (!it->second.rows.emplace(f[0], row).second) throw DataError(where + ": duplicate compound " + f[0]);
  }
  std::vector<MeasureTable> out;
  for (auto& [key, t] : tables) out.push_back(std::move(t));
  return out;
}

}  // namespace compsem
