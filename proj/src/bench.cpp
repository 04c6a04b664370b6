#include "dea/bench.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include "dea/dea.hpp"
#include "dea/inference.hpp"
#include "dea/population.hpp"

namespace dea::bench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string_view to_string(Experiment e) noexcept {
  switch (e) {
    case Experiment::Recovery: return "recovery";
    case Experiment::Level: return "level";
    case Experiment::Power: return "power";
    case Experiment::SnrGrowth: return "snr-growth";
  }
  return "recovery";
}

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::TS: return "TS";
    case Method::TF: return "TF";
    case Method::TD: return "TD";
    case Method::PCCA: return "PCCA";
    case Method::PcaBaseline: return "PCA-baseline";
    case Method::FisherZ: return "fisher-z";
  }
  return "TS";
}

Experiment experiment_from_string(std::string_view name) {
  if (name == "recovery") return Experiment::Recovery;
  if (name == "level") return Experiment::Level;
  if (name == "power") return Experiment::Power;
  if (name == "snr-growth") return Experiment::SnrGrowth;
  throw Error(ErrorCode::ConfigInvalid,
              "unknown experiment '" + std::string(name) + "' (expected recovery|level|power|snr-growth)");
}

Method method_from_string(std::string_view name) {
  if (name == "TS") return Method::TS;
  if (name == "TF") return Method::TF;
  if (name == "TD") return Method::TD;
  if (name == "PCCA") return Method::PCCA;
  if (name == "PCA-baseline") return Method::PcaBaseline;
  if (name == "fisher-z") return Method::FisherZ;
  throw Error(ErrorCode::ConfigInvalid,
              "unknown method '" + std::string(name) + "' (expected TS|TF|TD|PCCA|PCA-baseline|fisher-z)");
}

namespace {

bool method_applies(Experiment e, Method m) {
  switch (e) {
    case Experiment::Recovery: return m != Method::FisherZ;
    case Experiment::Level:
    case Experiment::Power: return m == Method::TF || m == Method::TD || m == Method::FisherZ;
    case Experiment::SnrGrowth: return m == Method::TS || m == Method::TF || m == Method::TD;
  }
  return false;
}

}  // namespace

void ExperimentPlan::validate() const {
  if (repetitions < 1) throw Error(ErrorCode::ConfigInvalid, "repetitions must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::ConfigInvalid, "alpha must lie in (0, 1)");
  if (!(ridge >= 0.0)) throw Error(ErrorCode::ConfigInvalid, "ridge must be >= 0");
  if (d_grid.empty()) throw Error(ErrorCode::ConfigInvalid, "d_grid is empty");
  if (experiment != Experiment::SnrGrowth && n_grid.empty()) throw Error(ErrorCode::ConfigInvalid, "n_grid is empty");
  if (methods.empty()) throw Error(ErrorCode::ConfigInvalid, "no methods listed");
  for (Index n : n_grid) {
    if (n < 2) throw Error(ErrorCode::ConfigInvalid, "n_grid entries must be >= 2");
  }
  for (Index d : d_grid) {
    if (d < 1) throw Error(ErrorCode::ConfigInvalid, "d_grid entries must be >= 1");
  }
  for (Method m : methods) {
    if (!method_applies(experiment, m)) {
      throw Error(ErrorCode::ConfigInvalid, "method " + std::string(to_string(m)) + " does not apply to experiment " +
                                                std::string(to_string(experiment)));
    }
    if (m == Method::FisherZ && scm.p != 1) throw Error(ErrorCode::ConfigInvalid, "fisher-z needs p = 1");
    if (m == Method::TD && regressor.kind != regression::RegressorKind::LinearOls) {
      throw Error(ErrorCode::ConfigInvalid, "TD needs the ols regressor");
    }
  }
  if (regressor.kind == regression::RegressorKind::Knn && regressor.knn_k < 1) {
    throw Error(ErrorCode::ConfigInvalid, "knn_k must be >= 1");
  }
  if (experiment == Experiment::Power && !(scm.u > 0.0)) {
    throw Error(ErrorCode::ConfigInvalid, "power experiment needs u > 0");
  }
  if (experiment == Experiment::SnrGrowth && scm.noise_structure != NoiseStructure::Diagonal) {
    throw Error(ErrorCode::ConfigInvalid, "snr-growth needs the diagonal noise structure");
  }
  ScmConfig probe = scm;
  probe.u = 1.0;
  probe.rank = 1;
  probe.validate();
}

void to_json(nlohmann::json& j, const ExperimentPlan& plan) {
  std::vector<std::string> methods;
  for (Method m : plan.methods) methods.emplace_back(to_string(m));
  j = nlohmann::json{{"experiment", std::string(to_string(plan.experiment))},
                     {"n_grid", plan.n_grid},
                     {"d_grid", plan.d_grid},
                     {"methods", methods},
                     {"repetitions", plan.repetitions},
                     {"alpha", plan.alpha},
                     {"scm", plan.scm},
                     {"master_seed", plan.master_seed},
                     {"regressor", std::string(regression::to_string(plan.regressor.kind))},
                     {"knn_k", plan.regressor.knn_k},
                     {"ridge", plan.ridge}};
}

void from_json(const nlohmann::json& j, ExperimentPlan& plan) {
  static const std::set<std::string> known{"experiment", "n_grid", "d_grid", "methods", "repetitions", "alpha",
                                           "scm", "master_seed", "regressor", "knn_k", "ridge", "description"};
  if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, "plan must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw Error(ErrorCode::ConfigInvalid, "unknown plan key '" + key + "'");
  }
  try {
    if (!j.contains("experiment")) throw Error(ErrorCode::ConfigInvalid, "plan needs an 'experiment' key");
    plan.experiment = experiment_from_string(j.at("experiment").get<std::string>());
    if (j.contains("n_grid")) plan.n_grid = j.at("n_grid").get<std::vector<Index>>();
    if (j.contains("d_grid")) plan.d_grid = j.at("d_grid").get<std::vector<Index>>();
    if (j.contains("methods")) {
      plan.methods.clear();
      for (const auto& m : j.at("methods")) plan.methods.push_back(method_from_string(m.get<std::string>()));
    }
    if (j.contains("repetitions")) plan.repetitions = j.at("repetitions").get<int>();
    if (j.contains("alpha")) plan.alpha = j.at("alpha").get<double>();
    if (j.contains("scm")) plan.scm = j.at("scm").get<ScmConfig>();
    if (j.contains("master_seed")) plan.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("regressor")) {
      plan.regressor.kind = regression::regressor_kind_from_string(j.at("regressor").get<std::string>());
    }
    if (j.contains("knn_k")) plan.regressor.knn_k = j.at("knn_k").get<int>();
    if (j.contains("ridge")) plan.ridge = j.at("ridge").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("malformed plan: ") + e.what());
  }
}

const ReportRow& ExperimentReport::find(Index cell_n, Index cell_d, std::string_view method,
                                        std::string_view metric) const {
  for (const auto& row : rows) {
    if (row.cell_n == cell_n && row.cell_d == cell_d && row.method == method && row.metric == metric) return row;
  }
  throw Error(ErrorCode::ConfigInvalid, "no report row for n = " + std::to_string(cell_n) + ", d = " +
                                            std::to_string(cell_d) + ", " + std::string(method) + "/" +
                                            std::string(metric));
}

double lower_quantile(std::vector<double> values, double q) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(values.size() - 1)));
  return values[std::min(idx, values.size() - 1)];
}

namespace {

using Clock = std::chrono::steady_clock;

unsigned resolve_threads(unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  return threads;
}

// Runs task(i) for i in [0, count) on `threads` workers. Results must be
// written by index; the first non-dea exception is rethrown after the join.
template <class Task>
void parallel_for(std::size_t count, unsigned threads, Task&& task) {
  threads = std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

struct Cell {
  Index n;
  Index d;
};

std::vector<Cell> cells_of(const ExperimentPlan& plan) {
  std::vector<Cell> out;
  for (Index n : plan.n_grid)
    for (Index d : plan.d_grid) out.push_back({n, d});
  return out;
}

ScmConfig cell_config(const ExperimentPlan& plan, const Cell& cell, std::uint64_t seed) {
  ScmConfig cfg = plan.scm;
  cfg.n = cell.n;
  cfg.d = cell.d;
  cfg.rank = std::min(cfg.rank, cell.d);
  cfg.seed = seed;
  if (plan.experiment == Experiment::Level) cfg.u = 0.0;
  return cfg;
}

// One value per (method, metric slot) of a repetition; nullopt when the fit failed.
using RepValues = std::vector<std::optional<double>>;

ExperimentReport assemble(const ExperimentPlan& plan, const std::vector<Cell>& cells,
                          const std::vector<RepValues>& results, const std::vector<std::string>& metrics,
                          bool rate_first) {
  ExperimentReport report;
  report.plan = plan;
  report.master_seed = plan.master_seed;
  const std::size_t reps = static_cast<std::size_t>(plan.repetitions);
  const std::size_t slots = metrics.size();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t m = 0; m < plan.methods.size(); ++m) {
      for (std::size_t k = 0; k < slots; ++k) {
        std::vector<double> values;
        bool failed = false;
        for (std::size_t rep = 0; rep < reps; ++rep) {
          const auto& v = results[c * reps + rep][m * slots + k];
          if (v) {
            values.push_back(*v);
          } else {
            failed = true;
          }
        }
        ReportRow row;
        row.experiment = std::string(to_string(plan.experiment));
        row.cell_n = cells[c].n;
        row.cell_d = cells[c].d;
        row.method = std::string(to_string(plan.methods[m]));
        row.metric = metrics[k];
        row.reps = static_cast<int>(values.size());
        row.failed = failed;
        if (rate_first && k == 0) {
          double mean = kNaN;
          if (!values.empty()) {
            mean = 0.0;
            for (double x : values) mean += x;
            mean /= static_cast<double>(values.size());
          }
          row.median = row.q25 = row.q75 = mean;
        } else {
          row.median = lower_quantile(values, 0.5);
          row.q25 = lower_quantile(values, 0.25);
          row.q75 = lower_quantile(values, 0.75);
        }
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

double abs_correlation(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  const double denom = std::sqrt(ac.squaredNorm() * bc.squaredNorm());
  if (!(denom > 0.0)) return 0.0;
  return std::min(1.0, std::abs(ac.dot(bc)) / denom);
}

Vector leading_principal_component(const Matrix& y) {
  const auto eig = sym_eig(sample_covariance(y));
  return eig.eigenvectors.col(0);
}

Vector recovery_direction(Method method, const DataTriplet& data, const ResidualCovariances* cov,
                          const ExperimentPlan& plan) {
  switch (method) {
    case Method::TS: return fit_from_covariances(*cov, StatisticKind::TS, plan.regressor, plan.ridge).w.col(0);
    case Method::TF: return fit_from_covariances(*cov, StatisticKind::TF, plan.regressor, plan.ridge).w.col(0);
    case Method::TD: return fit_from_covariances(*cov, StatisticKind::TD, plan.regressor, plan.ridge).w.col(0);
    case Method::PCCA: return pcca_fit(data, plan.regressor, 1, plan.ridge).w.col(0);
    case Method::PcaBaseline: return leading_principal_component(data.y);
    case Method::FisherZ: break;
  }
  throw Error(ErrorCode::ConfigInvalid, "fisher-z has no direction");
}

bool needs_covariances(const std::vector<Method>& methods) {
  return std::any_of(methods.begin(), methods.end(),
                     [](Method m) { return m == Method::TS || m == Method::TF || m == Method::TD; });
}

template <class RepFn>
std::vector<RepValues> run_reps(const ExperimentPlan& plan, const std::vector<Cell>& cells, std::size_t slots,
                                unsigned threads, RepFn&& rep_fn) {
  const std::size_t reps = static_cast<std::size_t>(plan.repetitions);
  std::vector<RepValues> results(cells.size() * reps, RepValues(plan.methods.size() * slots));
  parallel_for(results.size(), threads, [&](std::size_t task) {
    const std::size_t c = task / reps;
    const std::size_t rep = task % reps;
    const std::uint64_t seed = derive_seed(plan.master_seed, c, rep);
    try {
      rep_fn(cell_config(plan, cells[c], seed), results[task]);
    } catch (const Error&) {
      std::fill(results[task].begin(), results[task].end(), std::nullopt);
    }
  });
  return results;
}

ExperimentReport run_testing(const ExperimentPlan& plan, unsigned threads) {
  const auto start = Clock::now();
  const auto cells = cells_of(plan);
  constexpr std::size_t kSlots = 2;
  const auto results = run_reps(plan, cells, kSlots, threads, [&](const ScmConfig& cfg, RepValues& out) {
    const ScmModel model(cfg);
    const ScmSample s = model.draw(cfg.n, model.training_stream());
    std::optional<ResidualCovariances> cov;
    for (std::size_t m = 0; m < plan.methods.size(); ++m) {
      try {
        CitResult res;
        switch (plan.methods[m]) {
          case Method::TF:
          case Method::TD: {
            if (!cov) cov = residual_covariances(s.data, plan.regressor);
            const bool tf = plan.methods[m] == Method::TF;
            const auto fit = fit_from_covariances(*cov, tf ? StatisticKind::TF : StatisticKind::TD, plan.regressor,
                                                  plan.ridge);
            res = tf ? test_lambda_f(fit) : test_lambda_d(fit);
            break;
          }
          case Method::FisherZ: res = fisher_z_multivariate(s.data.x.col(0), s.data.y, s.data.z); break;
          default: throw Error(ErrorCode::ConfigInvalid, "method does not apply");
        }
        out[m * kSlots] = res.p_value < plan.alpha ? 1.0 : 0.0;
        out[m * kSlots + 1] = res.p_value;
      } catch (const Error&) {
        out[m * kSlots] = out[m * kSlots + 1] = std::nullopt;
      }
    }
  });
  auto report = assemble(plan, cells, results, {"rejection_rate", "p_value"}, true);
  report.wall_time_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

}  // namespace

ExperimentReport run_recovery(const ExperimentPlan& plan, unsigned threads) {
  plan.validate();
  if (plan.experiment != Experiment::Recovery) throw Error(ErrorCode::ConfigInvalid, "plan is not a recovery plan");
  const auto start = Clock::now();
  const auto cells = cells_of(plan);
  constexpr std::size_t kSlots = 2;
  const bool shared = needs_covariances(plan.methods);
  const auto results = run_reps(plan, cells, kSlots, threads, [&](const ScmConfig& cfg, RepValues& out) {
    const ScmModel model(cfg);
    const ScmSample train = model.draw(cfg.n, model.training_stream());
    const ScmSample test = model.draw(cfg.n, model.heldout_stream(0));
    std::optional<ResidualCovariances> cov;
    if (shared) {
      try {
        cov = residual_covariances(train.data, plan.regressor);
      } catch (const Error&) {
      }
    }
    for (std::size_t m = 0; m < plan.methods.size(); ++m) {
      const Method method = plan.methods[m];
      const bool nested = method == Method::TS || method == Method::TF || method == Method::TD;
      try {
        if (nested && !cov) throw Error(ErrorCode::NotPositiveDefinite, "residual covariances unavailable");
        const Vector w = recovery_direction(method, train.data, cov ? &*cov : nullptr, plan);
        out[m * kSlots] = abs_correlation(test.data.y * w, test.phi_x);
        out[m * kSlots + 1] = abs_correlation(train.data.y * w, train.phi_x);
      } catch (const Error&) {
        out[m * kSlots] = out[m * kSlots + 1] = std::nullopt;
      }
    }
  });
  auto report = assemble(plan, cells, results, {"corr_heldout", "corr_insample"}, false);
  report.wall_time_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

ExperimentReport run_level(const ExperimentPlan& plan, unsigned threads) {
  plan.validate();
  if (plan.experiment != Experiment::Level) throw Error(ErrorCode::ConfigInvalid, "plan is not a level plan");
  return run_testing(plan, threads);
}

ExperimentReport run_power(const ExperimentPlan& plan, unsigned threads) {
  plan.validate();
  if (plan.experiment != Experiment::Power) throw Error(ErrorCode::ConfigInvalid, "plan is not a power plan");
  return run_testing(plan, threads);
}

ExperimentReport run_snr_growth(const ExperimentPlan& plan) {
  plan.validate();
  if (plan.experiment != Experiment::SnrGrowth) throw Error(ErrorCode::ConfigInvalid, "plan is not an snr-growth plan");
  const auto start = Clock::now();
  static constexpr std::array<Profile, 4> kProfiles{Profile::LinearGrowth, Profile::Constant, Profile::Inverse,
                                                    Profile::InverseSquare};
  ExperimentReport report;
  report.plan = plan;
  report.master_seed = plan.master_seed;
  for (Index d : plan.d_grid) {
    for (Profile sp : kProfiles) {
      for (Profile bp : kProfiles) {
        PopulationModel pm;
        pm.b = profile_vector(bp, d);
        pm.sigma = SymMatrixd(Matrix(profile_vector(sp, d).asDiagonal()));
        pm.sigma_psi = SymMatrixd(Matrix::Zero(d, d));
        pm.phi_variance = 1.0;
        const auto dirs = population_directions(pm);
        const std::string metric =
            "snr[sigma=" + std::string(to_string(sp)) + ",b=" + std::string(to_string(bp)) + "]";
        for (Method m : plan.methods) {
          const Vector& w = m == Method::TS ? dirs.w_s : m == Method::TF ? dirs.w_f : dirs.w_d;
          const double value = snr(pm, w);
          report.rows.push_back({std::string(to_string(plan.experiment)), 0, d, std::string(to_string(m)), metric,
                                 value, value, value, 1, false});
        }
      }
    }
  }
  report.wall_time_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

ExperimentReport run_plan(const ExperimentPlan& plan, unsigned threads) {
  switch (plan.experiment) {
    case Experiment::Recovery: return run_recovery(plan, threads);
    case Experiment::Level: return run_level(plan, threads);
    case Experiment::Power: return run_power(plan, threads);
    case Experiment::SnrGrowth: return run_snr_growth(plan);
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown experiment");
}

namespace {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", x);
  return buf.data();
}

nlohmann::json json_number(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

std::string report_csv(const ExperimentReport& report) {
  std::string out = "experiment,cell_n,cell_d,method,metric,median,q25,q75,reps,failed\n";
  for (const auto& row : report.rows) {
    std::string metric = row.metric;
    if (metric.find(',') != std::string::npos) metric = "\"" + metric + "\"";
    out += row.experiment + ',' + std::to_string(row.cell_n) + ',' + std::to_string(row.cell_d) + ',' + row.method +
           ',' + metric + ',' + format_double(row.median) + ',' + format_double(row.q25) + ',' +
           format_double(row.q75) + ',' + std::to_string(row.reps) + ',' + (row.failed ? "1" : "0") + '\n';
  }
  return out;
}

nlohmann::json report_json(const ExperimentReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"experiment", row.experiment},
                    {"cell_n", row.cell_n},
                    {"cell_d", row.cell_d},
                    {"method", row.method},
                    {"metric", row.metric},
                    {"median", json_number(row.median)},
                    {"q25", json_number(row.q25)},
                    {"q75", json_number(row.q75)},
                    {"reps", row.reps},
                    {"failed", row.failed}});
  }
  return {{"plan", report.plan}, {"master_seed", report.master_seed}, {"rows", rows}};
}

}  // namespace dea::bench
