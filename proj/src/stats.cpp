#include "compsem/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>

#include "compsem/error.hpp"

namespace compsem {
namespace {

void check_pair(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) throw DataError(std::string(what) + ": length mismatch");
  if (a.empty()) throw DataError(std::string(what) + ": empty input");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) throw DataError(std::string(what) + ": non-finite value");
  }
}

bool constant(std::span<const double> x) {
  return std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end();
}

// Lowest layer wins ties; std::map iterates in ascending layer order.
template <typename Key, typename Better>
std::optional<std::size_t> select(const std::map<std::size_t, Evaluation>& per_layer, Key key, Better better) {
  std::optional<std::size_t> best;
  std::optional<double> best_value;
  for (const auto& [layer, ev] : per_layer) {
    std::optional<double> v = key(ev);
    if (!v) continue;
    if (!best_value || better(*v, *best_value)) {
      best = layer;
      best_value = v;
    }
  }
  return best;
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> gold) {
  check_pair(pred, gold, "mae");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - gold[i]);
  return sum / static_cast<double>(pred.size());
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "pearson");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedStatistic("pearson: constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "spearman");
  if (x.size() < 2) throw UndefinedStatistic("spearman: fewer than two observations");
  if (constant(x) || constant(y)) throw UndefinedStatistic("spearman: constant series");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

EvalResult evaluate_values(std::span<const double> pred, std::span<const double> gold) {
  EvalResult r;
  r.n = pred.size();
  r.mae = mae(pred, gold);
  try {
    r.spearman_rho = spearman(pred, gold);
  } catch (const UndefinedStatistic&) {
    r.spearman_rho.reset();
  }
  return r;
}

Evaluation evaluate(const MeasureTable& table, const Dataset& ds) {
  std::vector<double> lmd_pred, lmd_gold, st_pred, st_gold;
  for (const auto& [compound, row] : table.rows) {
    const Triplet* t = ds.find(compound);
    if (!t) continue;
    lmd_pred.push_back(row.lmd_pred);
    lmd_gold.push_back(t->human_lmd);
    st_pred.push_back(row.st_pred);
    st_gold.push_back(t->human_st);
  }
  if (lmd_pred.size() < 2) {
    throw DataError("evaluate: fewer than two compounds shared by table and dataset");
  }
  return {evaluate_values(lmd_pred, lmd_gold), evaluate_values(st_pred, st_gold)};
}

SweepReport make_sweep_report(std::map<std::size_t, Evaluation> per_layer) {
  if (per_layer.empty()) throw DataError("sweep: no layers evaluated");
  SweepReport report;
  auto greater = [](double a, double b) { return a > b; };
  auto less = [](double a, double b) { return a < b; };
  report.best_lmd_layer = select(per_layer, [](const Evaluation& e) { return e.lmd.spearman_rho; }, greater);
  report.best_st_layer = select(per_layer, [](const Evaluation& e) { return e.st.spearman_rho; }, greater);
  report.best_lmd_mae_layer =
      *select(per_layer, [](const Evaluation& e) { return std::optional<double>(e.lmd.mae); }, less);
  report.best_st_mae_layer =
      *select(per_layer, [](const Evaluation& e) { return std::optional<double>(e.st.mae); }, less);
  report.per_layer = std::move(per_layer);
  return report;
}

std::vector<std::size_t> sweep_layers(const EmbeddingStore& store, const SweepOptions& options) {
  std::vector<std::size_t> layers = options.layers;
  if (layers.empty()) {
    if (options.include_layer0 && store.has_layer0()) layers.push_back(0);
    for (std::size_t l = 1; l <= store.n_layers(); ++l) layers.push_back(l);
  }
  std::sort(layers.begin(), layers.end());
  layers.erase(std::unique(layers.begin(), layers.end()), layers.end());
  return layers;
}

SweepReport sweep(const Dataset& ds, const EmbeddingStore& store, const RepresentationSetting& setting,
                  const SweepOptions& options) {
  std::map<std::size_t, Evaluation> per_layer;
  for (std::size_t layer : sweep_layers(store, options)) {
    per_layer.emplace(layer, evaluate(compute_table(ds, store, setting, layer, options.measure), ds));
  }
  return make_sweep_report(std::move(per_layer));
}

double t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw DataError("t distribution: degrees of freedom must be positive");
  if (std::isnan(t)) throw DataError("t distribution: NaN statistic");
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return std::clamp(boost::math::ibeta(df / 2.0, 0.5, x), 0.0, 1.0);
}

RegressionResult ols_fit(std::span<const double> y, const PredictorMatrix& x, bool add_intercept) {
  const std::size_t n = y.size();
  const std::size_t p = x.columns.size();
  if (x.names.size() != p) throw DataError("ols: predictor names and columns differ in count");
  const std::size_t k = p + (add_intercept ? 1 : 0);
  if (n <= p + 1) {
    throw DataError("ols: need more than " + std::to_string(p + 1) + " observations, got " + std::to_string(n));
  }
  if (k == 0) throw DataError("ols: no columns to fit");

  Eigen::MatrixXd design(n, k);
  Eigen::VectorXd response(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(y[i])) throw DataError("ols: non-finite response");
    response(i) = y[i];
  }
  std::size_t col = 0;
  if (add_intercept) design.col(col++).setOnes();
  for (std::size_t j = 0; j < p; ++j, ++col) {
    if (x.columns[j].size() != n) throw DataError("ols: predictor '" + x.names[j] + "' has wrong length");
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(x.columns[j][i])) throw DataError("ols: non-finite value in '" + x.names[j] + "'");
      design(i, col) = x.columns[j][i];
    }
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < static_cast<Eigen::Index>(k)) throw DataError("ols: design matrix is rank deficient");
  const Eigen::VectorXd beta = qr.solve(response);
  const Eigen::VectorXd resid = response - design * beta;

  const double df = static_cast<double>(n - k);
  const double sigma2 = resid.squaredNorm() / df;

  // (X'X)^-1 = P R^-1 R^-T P'
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k),
                                                                       static_cast<Eigen::Index>(k)));
  const Eigen::MatrixXd unpermuted = r_inv * r_inv.transpose();
  const auto perm = qr.colsPermutation();
  const Eigen::MatrixXd cov = perm * unpermuted * perm.transpose();

  auto coefficient = [&](std::size_t j) {
    Coefficient c;
    c.estimate = beta(static_cast<Eigen::Index>(j));
    c.std_error = std::sqrt(sigma2 * cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)));
    c.t_stat = c.std_error > 0.0 ? c.estimate / c.std_error : std::copysign(INFINITY, c.estimate);
    c.p_value = t_two_sided_p(c.t_stat, df);
    return c;
  };

  RegressionResult result;
  result.n = n;
  col = 0;
  if (add_intercept) result.intercept = coefficient(col++);
  for (std::size_t j = 0; j < p; ++j) result.coefficients.emplace_back(x.names[j], coefficient(col++));

  const double ssr = resid.squaredNorm();
  double sst = 0.0;
  if (add_intercept) {
    const double mean = response.mean();
    sst = (response.array() - mean).square().sum();
  } else {
    sst = response.squaredNorm();
  }
  result.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
  result.residuals.assign(resid.data(), resid.data() + resid.size());
  return result;
}

RegressionAnalysis regression_analysis(const Dataset& ds, const MeasureTable& table, Target target,
                                       const RegressionOptions& options) {
  using Getter = std::optional<double> (*)(const Dataset&, const Triplet&);
  struct Predictor {
    const char* name;
    Getter get;
  };
  static const Predictor predictors[] = {
      {kPredictorTokens,
       [](const Dataset& d, const Triplet& t) -> std::optional<double> {
         const Covariates* c = d.covariate(t.compound);
         if (!c || !c->n_tokens) return std::nullopt;
         return static_cast<double>(*c->n_tokens);
       }},
      {kPredictorInstances,
       [](const Dataset& d, const Triplet& t) -> std::optional<double> {
         const Covariates* c = d.covariate(t.compound);
         if (!c || !c->n_instances) return std::nullopt;
         return static_cast<double>(*c->n_instances);
       }},
      {kPredictorCompoundConc,
       [](const Dataset& d, const Triplet& t) -> std::optional<double> {
         const Covariates* c = d.covariate(t.compound);
         return c ? c->concreteness : std::nullopt;
       }},
      {kPredictorModifierConc,
       [](const Dataset& d, const Triplet& t) -> std::optional<double> {
         const Covariates* c = d.covariate(t.left);
         return c ? c->concreteness : std::nullopt;
       }},
      {kPredictorHeadConc,
       [](const Dataset& d, const Triplet& t) -> std::optional<double> {
         const Covariates* c = d.covariate(t.right);
         return c ? c->concreteness : std::nullopt;
       }},
  };

  std::vector<const Triplet*> rows;
  for (const auto& [compound, row] : table.rows) {
    if (const Triplet* t = ds.find(compound)) rows.push_back(t);
  }

  RegressionAnalysis analysis;
  std::vector<const Predictor*> active;
  for (const Predictor& pr : predictors) {
    const bool any = std::any_of(rows.begin(), rows.end(), [&](const Triplet* t) { return pr.get(ds, *t).has_value(); });
    if (any) active.push_back(&pr);
    else analysis.dropped_predictors.emplace_back(pr.name);
  }

  std::vector<double> y;
  std::vector<std::vector<double>> columns(active.size());
  for (const Triplet* t : rows) {
    std::vector<double> values;
    for (const Predictor* pr : active) {
      auto v = pr->get(ds, *t);
      if (!v) break;
      values.push_back(*v);
    }
    if (values.size() != active.size()) {
      analysis.excluded_compounds.push_back(t->compound);
      continue;
    }
    const MeasureRow& row = table.rows.at(t->compound);
    y.push_back(target == Target::lmd ? row.lmd_pred : row.st_pred);
    for (std::size_t j = 0; j < values.size(); ++j) columns[j].push_back(values[j]);
  }

  PredictorMatrix x;
  for (std::size_t j = 0; j < active.size(); ++j) {
    if (constant(columns[j])) {
      analysis.dropped_predictors.emplace_back(active[j]->name);
      continue;
    }
    std::vector<double> column = std::move(columns[j]);
    if (options.zscore) {
      const double n = static_cast<double>(column.size());
      const double mean = std::accumulate(column.begin(), column.end(), 0.0) / n;
      double ss = 0.0;
      for (double v : column) ss += (v - mean) * (v - mean);
      const double sd = std::sqrt(ss / (n - 1.0));
      for (double& v : column) v = (v - mean) / sd;
    }
    x.names.emplace_back(active[j]->name);
    x.columns.push_back(std::move(column));
  }
  analysis.result = ols_fit(y, x, true);
  return analysis;
}

}  // namespace compsem
