#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "compsem/dataset.hpp"
#include "compsem/embeddings.hpp"
#include "compsem/measures.hpp"

namespace compsem {

double mae(std::span<const double> pred, std::span<const double> gold);

/// 1-based ranks; tied values share the mean of their rank span.
std::vector<double> average_ranks(std::span<const double> x);

double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks. Throws UndefinedStatistic when either series is constant.
double spearman(std::span<const double> x, std::span<const double> y);

struct EvalResult {
  double mae = 0.0;
  std::optional<double> spearman_rho;  // empty when undefined
  std::size_t n = 0;

  bool operator==(const EvalResult&) const = default;
};

EvalResult evaluate_values(std::span<const double> pred, std::span<const double> gold);

struct Evaluation {
  EvalResult lmd;
  EvalResult st;

  bool operator==(const Evaluation&) const = default;
};

Evaluation evaluate(const MeasureTable& table, const Dataset& ds);

struct SweepOptions {
  std::vector<std::size_t> layers;  // empty: every encoder layer
  bool include_layer0 = false;
  MeasureOptions measure;
};

struct SweepReport {
  std::map<std::size_t, Evaluation> per_layer;
  std::optional<std::size_t> best_lmd_layer;  // argmax rho, ties to the lower layer
  std::optional<std::size_t> best_st_layer;
  std::size_t best_lmd_mae_layer = 0;  // argmin MAE, ties to the lower layer
  std::size_t best_st_mae_layer = 0;

  bool operator==(const SweepReport&) const = default;
};

/// Chooses best layers from already-evaluated layers.
SweepReport make_sweep_report(std::map<std::size_t, Evaluation> per_layer);

/// Layers a sweep visits for `store` under `options`.
std::vector<std::size_t> sweep_layers(const EmbeddingStore& store, const SweepOptions& options);

SweepReport sweep(const Dataset& ds, const EmbeddingStore& store, const RepresentationSetting& setting,
                  const SweepOptions& options = {});

struct Coefficient {
  double estimate = 0.0;
  double std_error = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
};

struct RegressionResult {
  std::vector<std::pair<std::string, Coefficient>> coefficients;
  std::optional<Coefficient> intercept;
  std::size_t n = 0;
  double r_squared = 0.0;
  std::vector<double> residuals;
};

struct PredictorMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;  // one per predictor, each of length n
};

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
double t_two_sided_p(double t, double df);

/// Least squares via column-pivoted Householder QR. Throws DataError on rank deficiency or n <= p + 1.
RegressionResult ols_fit(std::span<const double> y, const PredictorMatrix& x, bool add_intercept = true);

enum class Target { lmd, st };

struct RegressionOptions {
  bool zscore = false;
};

struct RegressionAnalysis {
  RegressionResult result;
  std::vector<std::string> excluded_compounds;  // lacking a predictor
  std::vector<std::string> dropped_predictors;  // unavailable or constant
};

inline constexpr const char* kPredictorTokens = "n_tokens";
inline constexpr const char* kPredictorInstances = "n_instances";
inline constexpr const char* kPredictorCompoundConc = "compound_concreteness";
inline constexpr const char* kPredictorModifierConc = "modifier_concreteness";
inline constexpr const char* kPredictorHeadConc = "head_concreteness";

/// Regresses the predicted measure on token count, instance count and the
/// concreteness of compound, modifier and head.
RegressionAnalysis regression_analysis(const Dataset& ds, const MeasureTable& table, Target target,
                                       const RegressionOptions& options = {});

}  // namespace compsem
