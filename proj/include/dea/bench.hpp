#pragma once

// Simulation campaigns: recovery of phi(X), test level and power, and the
// population SNR growth study. Every (cell, repetition) owns the random stream
// derive_seed(master_seed, cell, repetition), so results do not depend on the
// number of worker threads.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dea/regression.hpp"
#include "dea/scm.hpp"
#include "json.hpp"

namespace dea::bench {

enum class Experiment { Recovery, Level, Power, SnrGrowth };
enum class Method { TS, TF, TD, PCCA, PcaBaseline, FisherZ };

std::string_view to_string(Experiment e) noexcept;
std::string_view to_string(Method m) noexcept;
Experiment experiment_from_string(std::string_view name);
Method method_from_string(std::string_view name);

struct ExperimentPlan {
  Experiment experiment = Experiment::Recovery;
  std::vector<Index> n_grid{500};
  std::vector<Index> d_grid{5};
  std::vector<Method> methods{Method::TS, Method::TF, Method::TD};
  int repetitions = 20;
  double alpha = 0.05;
  ScmConfig scm;
  std::uint64_t master_seed = 0;
  regression::RegressorSpec regressor;
  double ridge = 1e-8;

  /// ConfigInvalid if repetitions < 1, alpha outside (0, 1), a grid is empty or
  /// a method does not apply to the experiment.
  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentPlan& plan);
void from_json(const nlohmann::json& j, ExperimentPlan& plan);

struct ReportRow {
  std::string experiment;
  Index cell_n = 0;
  Index cell_d = 0;
  std::string method;
  std::string metric;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  int reps = 0;
  bool failed = false;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  nlohmann::json plan;  // echo of the plan that produced the rows
  std::uint64_t master_seed = 0;
  double wall_time_seconds = 0.0;  // not serialised; byte-stable outputs

  /// First row matching (cell_n, cell_d, method, metric); throws if absent.
  const ReportRow& find(Index cell_n, Index cell_d, std::string_view method, std::string_view metric) const;
};

/// q-quantile by the lower rule: sorted[floor(q (m - 1))].
double lower_quantile(std::vector<double> values, double q);

ExperimentReport run_recovery(const ExperimentPlan& plan, unsigned threads = 1);
ExperimentReport run_level(const ExperimentPlan& plan, unsigned threads = 1);
ExperimentReport run_power(const ExperimentPlan& plan, unsigned threads = 1);
ExperimentReport run_snr_growth(const ExperimentPlan& plan);
/// Dispatches on plan.experiment.
ExperimentReport run_plan(const ExperimentPlan& plan, unsigned threads = 1);

/// Fixed header experiment,cell_n,cell_d,method,metric,median,q25,q75,reps,failed,
/// numbers with 17 significant digits.
std::string report_csv(const ExperimentReport& report);
nlohmann::json report_json(const ExperimentReport& report);

}  // namespace dea::bench
