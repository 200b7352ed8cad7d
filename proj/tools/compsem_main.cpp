// compsem: compound semantics from layered word embeddings.
//
// Subcommands: sample, embed, score, sweep, eval, analyze {reversed,weighted-st,regression,templated}, report.
// Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 backend failure.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "compsem/backend.hpp"
#include "compsem/corpus.hpp"
#include "compsem/dataset.hpp"
#include "compsem/embeddings.hpp"
#include "compsem/error.hpp"
#include "compsem/measures.hpp"
#include "compsem/report.hpp"
#include "compsem/stats.hpp"
#include "compsem/util.hpp"

namespace fs = std::filesystem;
using namespace compsem;

namespace {

struct GlobalOptions {
  std::string dataset;
  std::string columns;
  std::string exclude;
  std::string store;
  std::string setting;
  std::string template_text;
  std::string layers;
  bool clamp_cosine = false;
  bool include_layer0 = false;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
};

std::vector<std::size_t> parse_layers(const std::string& spec) {
  std::vector<std::size_t> out;
  for (const std::string& item : split_csv_line(spec)) {
    std::string_view part = trim(item);
    if (part.empty()) continue;
    std::int64_t lo = 0, hi = 0;
    const auto dash = part.find('-');
    if (dash == std::string_view::npos) {
      if (!parse_int64(part, lo) || lo < 0) throw UsageError("bad layer: " + std::string(part));
      hi = lo;
    } else if (!parse_int64(part.substr(0, dash), lo) || !parse_int64(part.substr(dash + 1), hi) || lo < 0 || hi < lo) {
      throw UsageError("bad layer range: " + std::string(part));
    }
    for (std::int64_t l = lo; l <= hi; ++l) out.push_back(static_cast<std::size_t>(l));
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Runner {
public:
  explicit Runner(GlobalOptions& g) : g_(g) {}

  Dataset dataset() const {
    if (g_.dataset.empty()) throw UsageError("--dataset is required");
    LoadOptions opts;
    if (!g_.columns.empty()) opts.schema = ColumnSchema::parse(g_.columns);
    if (!g_.exclude.empty()) opts.exclusion_sidecar = fs::path(g_.exclude);
    return load_dataset(g_.dataset, opts);
  }

  AnyStore store(const std::string& path) const {
    if (path.empty()) throw UsageError("--store is required");
    return open_store(path);
  }

  // The setting named on the command line must agree with the store's manifest.
  RepresentationSetting setting_for(const EmbeddingStore& store) const {
    if (g_.setting.empty()) return store.setting();
    RepresentationSetting requested = RepresentationSetting::parse(
        g_.setting, g_.setting == "templated" && g_.template_text.empty() ? store.setting().template_text
                                                                          : g_.template_text);
    if (requested != store.setting()) {
      throw DataError("--setting " + requested.descriptor() + " does not match store setting " +
                      store.setting().descriptor());
    }
    return requested;
  }

  SweepOptions sweep_options() const {
    SweepOptions o;
    if (!g_.layers.empty()) o.layers = parse_layers(g_.layers);
    o.include_layer0 = g_.include_layer0;
    o.measure.clamp_cosine = g_.clamp_cosine;
    return o;
  }

  RunManifest manifest(const Dataset& ds, const std::string& provenance, const std::string& setting) const {
    RunManifest m;
    m.dataset_checksum = ds.checksum();
    m.store_provenance = provenance;
    m.setting = setting;
    m.clamp_cosine = g_.clamp_cosine;
    m.include_layer0 = g_.include_layer0;
    m.timestamp = utc_timestamp();
    return m;
  }

  fs::path out_dir() const {
    fs::path dir(g_.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
  }

  void emit(const std::string& name, const std::string& contents) const {
    const fs::path path = out_dir() / name;
    write_file(path, contents);
    std::cerr << "wrote " << path.string() << "\n";
  }

  void emit_manifest(const RunManifest& m) const { emit("manifest.json", m.to_json()); }

  GlobalOptions& g_;
};

std::string describe(const EvalResult& r) {
  std::ostringstream s;
  s << "mae=" << format_sig6(r.mae) << " rho=" << (r.spearman_rho ? format_sig6(*r.spearman_rho) : "NA")
    << " n=" << r.n;
  return s.str();
}

std::map<std::string, std::int64_t> read_count_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::map<std::string, std::int64_t> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line.front() == '#') continue;
    auto f = split_csv_line(line);
    std::int64_t n = 0;
    if (f.size() != 2 || !parse_int64(f[1], n)) {
      if (line_no == 1) continue;  // header
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 'word,count'");
    }
    out[to_lower_ascii(trim(f[0]))] = n;
  }
  return out;
}

void print_misses(const MeasureTable& t) {
  if (t.misses.empty()) return;
  std::cerr << "effective_n=" << t.effective_n() << "; " << t.misses.size() << " compounds skipped:";
  for (const TableMiss& m : t.misses) {
    std::cerr << ' ' << m.compound << " (missing";
    for (const auto& w : m.missing_words) std::cerr << ' ' << w;
    std::cerr << ')';
  }
  std::cerr << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compsem: lexeme meaning dominance and semantic transparency from word embeddings"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--dataset", g.dataset, "Triplet CSV (compound,left,right,lmd,st)");
  app.add_option("--columns", g.columns, "Column mapping, e.g. compound=Word,lmd=LMD");
  app.add_option("--exclude", g.exclude, "Exclusion sidecar of word,reason lines");
  app.add_option("--store", g.store, "Embedding dump directory or static text-vector file");
  app.add_option("--setting", g.setting, "nc-nospec, nc-withcls, nc-all, context or templated");
  app.add_option("--template", g.template_text, "Template for the templated setting (default 'This is a <word>')");
  app.add_option("--layers", g.layers, "Layers to evaluate, e.g. 1-24 or 10,20-22");
  app.add_flag("--clamp-cosine", g.clamp_cosine, "Clamp cosines to [0,1] before the formulas");
  app.add_flag("--include-layer0", g.include_layer0, "Also evaluate the input embedding layer when stored");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--seed", g.seed, "Seed for shuffled corpus sampling");

  Runner run(g);

  // sample
  auto* sample = app.add_subcommand("sample", "Sample corpus sentences for every dataset word");
  std::string corpus;
  std::size_t cap = 100, shards = 1;
  bool shuffle = false;
  sample->add_option("--corpus", corpus, "One sentence per line, UTF-8")->required();
  sample->add_option("--cap", cap, "Maximum sentences per word");
  sample->add_option("--shards", shards, "Parallel scan shards");
  sample->add_flag("--shuffle", shuffle, "Seeded random choice instead of the first matches");
  sample->callback([&] {
    const Dataset ds = run.dataset();
    SamplePlan plan{cap, g.seed, shuffle, shards};
    const SampleMap samples = sample_sentences(corpus, ds.words(), plan);
    run.emit("sentences.jsonl", samples_to_jsonl(samples));
    std::size_t zero = 0;
    for (const auto& [w, s] : samples) zero += s.sentences.empty();
    std::cout << samples.size() << " words sampled; " << zero << " with no matching sentence\n";
  });

  // embed
  auto* embed = app.add_subcommand("embed", "Encode dataset words through an inference backend into a dump");
  std::string backend_cmd, sentences_path, encoding = "jsonl";
  bool with_reversed = false;
  embed->add_option("--backend-cmd", backend_cmd, "Command speaking the NDJSON encoder protocol")->required();
  embed->add_option("--sentences", sentences_path, "sentences.jsonl from 'sample' (context setting)");
  embed->add_option("--encoding", encoding, "jsonl or binary")->check(CLI::IsMember({"jsonl", "binary"}));
  embed->add_flag("--with-reversed", with_reversed, "Also encode reversed compound strings");
  embed->callback([&] {
    const Dataset ds = run.dataset();
    if (g.setting.empty()) throw UsageError("--setting is required for embed");
    const RepresentationSetting setting = RepresentationSetting::parse(g.setting, g.template_text);
    std::set<std::string> words = ds.words();
    if (with_reversed) {
      const ReversedDataset reversed = reverse_compounds(ds);
      for (const Triplet& t : reversed.dataset.triplets()) words.insert(t.compound);
    }
    SampleMap samples;
    if (setting.kind == SettingKind::in_context) {
      if (sentences_path.empty()) throw UsageError("--sentences is required for the context setting");
      samples = samples_from_jsonl(read_file(sentences_path));
    }
    std::vector<EmbedRequest> requests;
    for (const std::string& w : words) {
      EmbedRequest r{w, {}};
      if (auto it = samples.find(w); it != samples.end()) r.sentences = it->second.sentences;
      requests.push_back(std::move(r));
    }
    PipeBackend backend(backend_cmd);
    EmbedResult result = embed_via_backend(requests, setting, backend);
    DumpOptions opts;
    opts.encoding = encoding == "binary" ? DumpEncoding::binary : DumpEncoding::jsonl;
    write_dump(result.store, run.out_dir(), opts);
    const RunManifest m = run.manifest(ds, backend.describe(), setting.descriptor());
    std::string counts = artifact_header(m) + "word,n_tokens\n";
    for (const auto& [w, n] : result.token_counts) counts += csv_escape(w) + ',' + std::to_string(n) + '\n';
    run.emit("token_counts.csv", counts);
    std::string misses = artifact_header(m) + "word,reason\n";
    for (const EmbedMiss& m : result.misses) misses += csv_escape(m.word) + ',' + csv_escape(m.reason) + '\n';
    run.emit("misses.csv", misses);
    std::cout << result.store.size() << " words embedded, " << result.misses.size() << " misses, "
              << result.skipped_sentences << " sentences skipped; " << result.store.n_layers() << " layers x "
              << result.store.dim() << "\n";
  });

  // score
  auto* score = app.add_subcommand("score", "Compute per-compound L, R, LMD and ST for each layer");
  score->callback([&] {
    const Dataset ds = run.dataset();
    AnyStore any = run.store(g.store);
    std::vector<MeasureTable> tables;
    RunManifest m;
    if (auto* st = std::get_if<StaticStore>(&any)) {
      tables.push_back(compute_table(ds, *st, {g.clamp_cosine}));
      m = run.manifest(ds, "static:" + g.store, "static");
    } else {
      auto& store = std::get<EmbeddingStore>(any);
      const auto setting = run.setting_for(store);
      const auto opts = run.sweep_options();
      for (std::size_t layer : sweep_layers(store, opts)) {
        tables.push_back(compute_table(ds, store, setting, layer, opts.measure));
      }
      m = run.manifest(ds, store.provenance(), setting.descriptor());
    }
    print_misses(tables.front());
    std::size_t violations = 0;
    for (const auto& t : tables) violations += t.range_violations;
    if (violations > 0 && !g.clamp_cosine) {
      std::cerr << violations << " (row, layer) pairs with a negative cosine; see --clamp-cosine\n";
    }
    run.emit("measures.csv", artifact_header(m) + measure_tables_csv(tables));
    run.emit_manifest(m);
  });

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "MAE and Spearman rho per layer, with best layers");
  sweep_cmd->callback([&] {
    const Dataset ds = run.dataset();
    AnyStore any = run.store(g.store);
    SweepReport report;
    RunManifest m;
    if (auto* st = std::get_if<StaticStore>(&any)) {
      const MeasureTable t = compute_table(ds, *st, {g.clamp_cosine});
      print_misses(t);
      report = make_sweep_report({{0, evaluate(t, ds)}});
      m = run.manifest(ds, "static:" + g.store, "static");
    } else {
      auto& store = std::get<EmbeddingStore>(any);
      const auto setting = run.setting_for(store);
      report = sweep(ds, store, setting, run.sweep_options());
      m = run.manifest(ds, store.provenance(), setting.descriptor());
    }
    run.emit("sweep.csv", sweep_csv(report, m));
    run.emit_manifest(m);
    auto opt = [](const std::optional<std::size_t>& l) { return l ? std::to_string(*l) : std::string("NA"); };
    std::cout << "best LMD rho layer " << opt(report.best_lmd_layer) << ", best ST rho layer "
              << opt(report.best_st_layer) << ", best LMD MAE layer " << report.best_lmd_mae_layer
              << ", best ST MAE layer " << report.best_st_mae_layer << "\n";
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a measures.csv against the dataset norms");
  std::string table_path;
  eval->add_option("--table", table_path, "measures.csv written by 'score'")->required();
  eval->callback([&] {
    const Dataset ds = run.dataset();
    const auto tables = parse_measure_tables_csv(read_file(table_path));
    for (const MeasureTable& t : tables) {
      const Evaluation ev = evaluate(t, ds);
      std::cout << t.setting_label << " layer " << t.layer << ": LMD " << describe(ev.lmd) << "; ST "
                << describe(ev.st) << "\n";
    }
  });

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Follow-up analyses");
  analyze->require_subcommand(1);

  auto* reversed = analyze->add_subcommand("reversed", "LMD with constituent order reversed in the compound");
  bool any_setting = false;
  reversed->add_flag("--any-setting", any_setting, "Permit in-context or templated stores");
  reversed->callback([&] {
    const Dataset ds = run.dataset();
    auto store = std::get<EmbeddingStore>(run.store(g.store));
    const auto setting = run.setting_for(store);
    if (!setting.is_no_context() && !any_setting) {
      throw UsageError("reversed analysis runs on no-context stores; pass --any-setting to override");
    }
    const ReversedComparison cmp = reversed_comparison(ds, store, setting, run.sweep_options());
    const RunManifest m = run.manifest(ds, store.provenance(), setting.descriptor());
    run.emit("reversed.csv", reversed_csv(cmp, m));
    run.emit_manifest(m);
    if (!cmp.skipped.empty()) std::cerr << cmp.skipped.size() << " compounds skipped in the reversed analysis\n";
  });

  auto* weighted = analyze->add_subcommand("weighted-st", "ST with unequal constituent weights");
  std::string weights;
  weighted->add_option("--weights", weights, "Comma-separated left weights (default 0,0.1,...,1)");
  weighted->callback([&] {
    const Dataset ds = run.dataset();
    auto store = std::get<EmbeddingStore>(run.store(g.store));
    const auto setting = run.setting_for(store);
    WeightGrid grid = WeightGrid::standard();
    if (!weights.empty()) {
      grid.weights.clear();
      for (const std::string& w : split_csv_line(weights)) {
        double v = 0.0;
        if (!parse_double(w, v)) throw UsageError("bad weight: " + w);
        grid.weights.push_back(v);
      }
    }
    const auto cells = weighted_st_grid(ds, store, setting, grid, run.sweep_options());
    const RunManifest m = run.manifest(ds, store.provenance(), setting.descriptor());
    run.emit("weighted_st.csv", grid_csv(cells, m));
    run.emit_manifest(m);
  });

  auto* regression = analyze->add_subcommand("regression", "Linear regression of predicted values on covariates");
  std::string concreteness, token_counts, target_name = "lmd";
  std::optional<std::size_t> reg_layer;
  bool zscore = false;
  std::int64_t reg_cap = 100;
  regression->add_option("--concreteness", concreteness, "Two-column concreteness norms")->required();
  regression->add_option("--token-counts", token_counts, "token_counts.csv written by 'embed'");
  regression->add_option("--target", target_name, "lmd or st")->check(CLI::IsMember({"lmd", "st"}));
  regression->add_option("--layer", reg_layer, "Layer to fit (default: best rho layer for the target)");
  regression->add_option("--cap", reg_cap, "Sampling cap the instance counts must respect");
  regression->add_flag("--zscore", zscore, "Standardize predictors");
  regression->callback([&] {
    Dataset ds = run.dataset();
    auto store = std::get<EmbeddingStore>(run.store(g.store));
    const auto setting = run.setting_for(store);
    const Target target = target_name == "st" ? Target::st : Target::lmd;

    CovariateJoin joined = join_covariates(ds, concreteness);
    std::cerr << joined.missing_compounds << " missing (compounds without concreteness)\n";
    ds = std::move(joined.dataset);
    if (!token_counts.empty()) ds = with_token_counts(ds, read_count_csv(token_counts));
    if (setting.kind == SettingKind::in_context) {
      std::map<std::string, std::int64_t> counts;
      for (const auto& [w, e] : store.entries()) counts[w] = e.n_instances();
      ds = with_instance_counts(ds, counts, reg_cap);
    }

    std::size_t layer = 0;
    if (reg_layer) {
      layer = *reg_layer;
    } else {
      const SweepReport rep = sweep(ds, store, setting, run.sweep_options());
      const auto best = target == Target::lmd ? rep.best_lmd_layer : rep.best_st_layer;
      if (!best) throw DataError("no layer has a defined rho");
      layer = *best;
    }
    const MeasureTable table = compute_table(ds, store, setting, layer, {g.clamp_cosine});
    const RegressionAnalysis analysis = regression_analysis(ds, table, target, {zscore});
    const RunManifest m = run.manifest(ds, store.provenance(), setting.descriptor());
    run.emit("regression_" + target_name + ".csv", regression_csv(analysis, m));
    run.emit_manifest(m);
    std::cout << "layer " << layer << ", n=" << analysis.result.n << ", R^2=" << format_sig6(analysis.result.r_squared)
              << ", excluded " << analysis.excluded_compounds.size() << " compounds";
    if (!analysis.dropped_predictors.empty()) {
      std::cout << ", dropped predictors:";
      for (const auto& p : analysis.dropped_predictors) std::cout << ' ' << p;
    }
    std::cout << "\n";
  });

  auto* templated = analyze->add_subcommand("templated", "Per-layer rho of a templated store beside other stores");
  std::vector<std::string> compare;
  templated->add_option("--compare", compare, "label=path of another store to place alongside");
  templated->callback([&] {
    const Dataset ds = run.dataset();
    auto store = std::get<EmbeddingStore>(run.store(g.store));
    if (store.setting().kind != SettingKind::templated) throw DataError("--store must hold a templated setting");
    std::vector<std::pair<std::string, AnyStore>> stores;
    stores.emplace_back("templated", store);
    for (const std::string& c : compare) {
      const auto eq = c.find('=');
      if (eq == std::string::npos) throw UsageError("--compare expects label=path");
      stores.emplace_back(c.substr(0, eq), open_store(c.substr(eq + 1)));
    }
    const RunManifest m = run.manifest(ds, store.provenance(), store.setting().descriptor());
    std::string out = artifact_header(m) + "label,layer,measure,mae,rho,n\n";
    for (auto& [label, any] : stores) {
      SweepReport rep;
      if (auto* st = std::get_if<StaticStore>(&any)) {
        rep = make_sweep_report({{0, evaluate(compute_table(ds, *st, {g.clamp_cosine}), ds)}});
      } else {
        auto& es = std::get<EmbeddingStore>(any);
        rep = sweep(ds, es, es.setting(), run.sweep_options());
      }
      for (const auto& [layer, ev] : rep.per_layer) {
        for (const auto& [name, r] : {std::pair<const char*, const EvalResult&>{"lmd", ev.lmd}, {"st", ev.st}}) {
          out += csv_escape(label) + ',' + std::to_string(layer) + ',' + name + ',' + format_full(r.mae) + ',' +
                 (r.spearman_rho ? format_full(*r.spearman_rho) : "NA") + ',' + std::to_string(r.n) + '\n';
        }
      }
    }
    run.emit("templated.csv", out);
    run.emit_manifest(m);
  });

  // report
  auto* report = app.add_subcommand("report", "Best-layer summary tables and per-compound trajectories");
  std::vector<std::string> entries;
  std::vector<std::string> trajectories;
  report->add_option("--entry", entries, "label=path of a store to summarize (repeatable)");
  report->add_option("--trajectory", trajectories, "Compounds whose per-layer values to emit (first entry)");
  report->callback([&] {
    const Dataset ds = run.dataset();
    if (entries.empty() && !g.store.empty()) entries.push_back("store=" + g.store);
    if (entries.empty()) throw UsageError("report needs --entry label=path or --store");
    std::vector<std::pair<std::string, SweepReport>> reports;
    std::optional<EmbeddingStore> first_layered;
    std::string provenance;
    for (const std::string& e : entries) {
      const auto eq = e.find('=');
      if (eq == std::string::npos) throw UsageError("--entry expects label=path");
      const std::string label = e.substr(0, eq);
      AnyStore any = open_store(e.substr(eq + 1));
      if (auto* st = std::get_if<StaticStore>(&any)) {
        reports.emplace_back(label, make_sweep_report({{0, evaluate(compute_table(ds, *st, {g.clamp_cosine}), ds)}}));
        provenance += label + "=static;";
      } else {
        auto& es = std::get<EmbeddingStore>(any);
        reports.emplace_back(label, sweep(ds, es, es.setting(), run.sweep_options()));
        provenance += label + "=" + es.provenance() + ";";
        if (!first_layered) first_layered = es;
      }
    }
    const RunManifest m = run.manifest(ds, provenance, "multiple");
    const SummaryTable table = summary_table(reports);
    run.emit("summary.csv", table.to_csv(m));
    run.emit("summary.txt", artifact_header(m) + table.to_text());
    std::cout << table.to_text();
    for (const auto& [label, rep] : reports) run.emit("sweep_" + label + ".csv", sweep_csv(rep, m));

    if (!trajectories.empty()) {
      if (!first_layered) throw UsageError("trajectories need a layered store entry");
      const auto opts = run.sweep_options();
      std::map<std::size_t, MeasureTable> tables;
      for (std::size_t layer : sweep_layers(*first_layered, opts)) {
        tables.emplace(layer, compute_table(ds, *first_layered, first_layered->setting(), layer, opts.measure));
      }
      std::vector<Trajectory> series;
      for (const std::string& c : trajectories) {
        const Triplet* t = ds.find(to_lower_ascii(c));
        if (!t) throw DataError("trajectory: compound not in dataset: " + c);
        series.push_back(trajectory(t->compound, tables, Target::lmd, t->human_lmd));
        series.push_back(trajectory(t->compound, tables, Target::st, t->human_st));
      }
      run.emit("trajectories.csv", trajectory_csv(series, m));
    }
    run.emit_manifest(m);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const compsem::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::usage: return 1;
      case ErrorKind::data: return 2;
      case ErrorKind::backend: return 3;
    }
  } catch (const std::bad_variant_access&) {
    std::cerr << "error: this analysis needs a layered embedding dump, not a static vector file\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
