#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "dea/bench.hpp"
#include "dea/dea.hpp"
#include "dea/inference.hpp"
#include "dea/io.hpp"
#include "dea/scm.hpp"
#include "json.hpp"

namespace dea::cli {

namespace {

struct Options {
  std::string input;
  std::string output;
  std::string x_cols;
  std::string y_cols;
  std::string z_cols;
  std::string stat = "tf";
  Index components = 1;
  double ridge = kDefaultRidge;
  std::string regressor = "ols";
  int knn_k = 10;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::string scm_config;
  std::string plan;
  std::string model;
};

struct Columns {
  std::vector<std::string> x, y, z;
};

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "'" + path + "' is not valid JSON: " + e.what());
  }
}

regression::RegressorSpec regressor_of(const Options& o) {
  regression::RegressorSpec spec;
  spec.kind = regression::regressor_kind_from_string(o.regressor);
  spec.knn_k = o.knn_k;
  return spec;
}

Columns resolve_columns(const io::CsvTable& table, const Options& o) {
  Columns c{io::select_columns(table.header, o.x_cols, 'x'), io::select_columns(table.header, o.y_cols, 'y'),
            io::select_columns(table.header, o.z_cols, 'z')};
  if (c.y.empty()) throw Error(ErrorCode::ConfigInvalid, "no outcome columns selected (use --y-cols)");
  std::vector<std::string> all;
  for (const auto* group : {&c.x, &c.y, &c.z}) all.insert(all.end(), group->begin(), group->end());
  std::sort(all.begin(), all.end());
  const auto dup = std::adjacent_find(all.begin(), all.end());
  if (dup != all.end()) throw Error(ErrorCode::ConfigInvalid, "column '" + *dup + "' is in more than one group");
  return c;
}

DataTriplet triplet_of(const io::CsvTable& table, const Columns& c) {
  return {table.columns(c.x), table.columns(c.y), table.columns(c.z)};
}

std::uint64_t data_fingerprint(const DataTriplet& d) {
  return io::fingerprint(d.z, io::fingerprint(d.y, io::fingerprint(d.x)));
}

nlohmann::json number_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

nlohmann::json cit_json(const CitResult& r) {
  nlohmann::json j{{"test", std::string(to_string(r.kind))},
                   {"statistic", number_or_null(r.statistic)},
                   {"raw", number_or_null(r.raw)},
                   {"dfn", r.dfn},
                   {"dfd", r.dfd},
                   {"p_value", number_or_null(r.p_value)}};
  if (r.alpha) j["alpha"] = *r.alpha;
  if (r.reject) j["reject"] = *r.reject;
  return j;
}

CitResult eigen_test(const DeaModel& model) {
  if (model.kind == StatisticKind::TF) return test_lambda_f(model);
  if (model.kind == StatisticKind::TD) return test_lambda_d(model);
  throw Error(ErrorCode::WrongStatisticKind,
              "tests exist for tf and td models, got " + std::string(to_string(model.kind)));
}

void warn_scope(const DeaModel& model, std::ostream& err) {
  if (model.kind == StatisticKind::TF && model.covariances.p > 1) {
    err << "warning: the lambda-F null law assumes a scalar treatment (p = 1); proceeding with p = "
        << model.covariances.p << ", dfd = n - p - r - 1 = " << model.dfd << "\n";
  }
}

std::string strip_extension(std::string path, std::initializer_list<std::string_view> exts) {
  for (auto ext : exts) {
    if (path.size() > ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0) {
      path.resize(path.size() - ext.size());
      break;
    }
  }
  return path;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorCode::ConfigInvalid, std::string(flag) + " is required");
}

int cmd_fit(const Options& o, std::ostream& out, std::ostream& err) {
  require(o.input, "--input");
  require(o.output, "--output");
  const auto table = io::read_csv(o.input);
  const auto cols = resolve_columns(table, o);
  const auto data = triplet_of(table, cols);
  const auto spec = regressor_of(o);
  const auto kind = statistic_kind_from_string(o.stat);

  io::ModelDocument doc;
  doc.model = fit_dea(data, kind, spec, o.components, o.ridge);
  doc.x_columns = cols.x;
  doc.y_columns = cols.y;
  doc.z_columns = cols.z;
  doc.data_fingerprint = data_fingerprint(data);
  if (data.p() > 0) {
    try {
      doc.b_hat = effect_direction(data, spec);
    } catch (const Error& e) {
      err << "warning: no effect direction stored (" << e.what() << ")\n";
    }
  }
  io::write_text(o.output, io::model_to_json(doc).dump(2) + "\n");

  nlohmann::json summary{{"kind", std::string(to_string(doc.model.kind))},
                         {"lambda_1", doc.model.leading_eigenvalue()},
                         {"dfn", doc.model.dfn},
                         {"dfd", doc.model.dfd},
                         {"model", o.output}};
  if (kind == StatisticKind::TF || kind == StatisticKind::TD) {
    warn_scope(doc.model, err);
    CitResult r = eigen_test(doc.model);
    if (o.alpha) r.at_level(*o.alpha);
    summary["test"] = cit_json(r);
    summary["p_value"] = number_or_null(r.p_value);
  }
  out << summary.dump() << "\n";
  return kExitOk;
}

int cmd_test(const Options& o, std::ostream& out, std::ostream& err) {
  const double alpha = o.alpha.value_or(0.05);
  CitResult r;
  if (!o.model.empty() && o.input.empty()) {
    const auto doc = io::model_from_json(read_json(o.model));
    warn_scope(doc.model, err);
    r = eigen_test(doc.model);
  } else {
    require(o.input, "--input");
    const auto table = io::read_csv(o.input);
    const auto cols = resolve_columns(table, o);
    const auto data = triplet_of(table, cols);
    std::string stat = o.stat;
    std::transform(stat.begin(), stat.end(), stat.begin(), [](unsigned char c) { return std::tolower(c); });
    if (stat == "fisher-z" || stat == "fisherz") {
      if (data.p() != 1) throw Error(ErrorCode::ConfigInvalid, "fisher-z needs exactly one X column");
      r = fisher_z_multivariate(data.x.col(0), data.y, data.z);
    } else {
      const auto model = fit_dea(data, statistic_kind_from_string(stat), regressor_of(o), 1, o.ridge);
      warn_scope(model, err);
      r = eigen_test(model);
    }
  }
  r.at_level(alpha);
  out << cit_json(r).dump() << "\n";
  return kExitOk;
}

io::ModelDocument load_model(const Options& o) {
  require(o.model, "--model");
  return io::model_from_json(read_json(o.model));
}

int cmd_project(const Options& o, std::ostream& out, std::ostream&) {
  require(o.input, "--input");
  const auto doc = load_model(o);
  const auto table = io::read_csv(o.input);
  const Matrix proj = project(doc.model, table.columns(doc.y_columns));
  std::vector<std::string> header;
  for (Index k = 0; k < proj.cols(); ++k) header.push_back("w" + std::to_string(k));
  const std::string text = io::format_csv(header, proj);
  if (o.output.empty()) {
    out << text;
  } else {
    io::write_text(o.output, text);
  }
  return kExitOk;
}

int cmd_decompose(const Options& o, std::ostream& out, std::ostream&) {
  require(o.input, "--input");
  require(o.output, "--output");
  const auto doc = load_model(o);
  if (doc.b_hat.size() == 0) {
    throw Error(ErrorCode::ConfigInvalid, "model has no effect direction (refit with at least one X column)");
  }
  const auto table = io::read_csv(o.input);
  const Matrix y = table.columns(doc.y_columns);
  const auto parts = decompose_effect(doc.model, y, doc.b_hat);
  const double gap = (parts.forced + parts.internal - y).cwiseAbs().maxCoeff();
  if (y.size() > 0 && !(gap <= 1e-9)) {
    throw Error(ErrorCode::NoConvergence, "forced + internal misses Y by " + io::format_double(gap));
  }
  const std::string base = strip_extension(o.output, {".csv"});
  io::write_text(base + "_forced.csv", io::format_csv(doc.y_columns, parts.forced));
  io::write_text(base + "_internal.csv", io::format_csv(doc.y_columns, parts.internal));
  out << nlohmann::json{{"forced", base + "_forced.csv"}, {"internal", base + "_internal.csv"}, {"max_gap", gap}}.dump()
      << "\n";
  return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream&) {
  require(o.scm_config, "--scm-config");
  ScmConfig cfg = read_json(o.scm_config).get<ScmConfig>();
  if (o.seed) cfg.seed = *o.seed;
  const ScmSample s = sample(cfg);
  std::vector<std::string> header;
  for (Index j = 0; j < cfg.p; ++j) header.push_back("x" + std::to_string(j));
  for (Index j = 0; j < cfg.d; ++j) header.push_back("y" + std::to_string(j));
  for (Index j = 0; j < cfg.r; ++j) header.push_back("z" + std::to_string(j));
  header.push_back("phi_x");
  Matrix all(cfg.n, cfg.p + cfg.d + cfg.r + 1);
  all << s.data.x, s.data.y, s.data.z, s.phi_x;
  const std::string text = io::format_csv(header, all);
  if (o.output.empty()) {
    out << text;
  } else {
    io::write_text(o.output, text);
  }
  return kExitOk;
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream& err) {
  require(o.plan, "--plan");
  require(o.output, "--output");
  bench::ExperimentPlan plan = read_json(o.plan).get<bench::ExperimentPlan>();
  if (o.seed) plan.master_seed = *o.seed;
  const unsigned threads = bench_threads();
  const auto report = bench::run_plan(plan, threads);
  const std::string base = strip_extension(o.output, {".csv", ".json"});
  io::write_text(base + ".csv", bench::report_csv(report));
  io::write_text(base + ".json", bench::report_json(report).dump(2) + "\n");
  std::size_t failed = 0;
  for (const auto& row : report.rows) failed += row.failed ? 1 : 0;
  err << "bench: " << report.rows.size() << " rows, " << failed << " with failures, " << threads << " threads, "
      << report.wall_time_seconds << " s\n";
  out << nlohmann::json{{"csv", base + ".csv"}, {"json", base + ".json"}, {"rows", report.rows.size()}}.dump() << "\n";
  return kExitOk;
}

std::string_view hint(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "increase --ridge";
    case ErrorCode::RankDeficient: return "drop collinear or constant columns, or add rows";
    case ErrorCode::InsufficientSamples: return "add rows or use fewer columns";
    case ErrorCode::UnsupportedRegressor: return "td needs --regressor ols";
    case ErrorCode::MissingNoiseCovariance: return "refit with --regressor ols";
    case ErrorCode::WrongStatisticKind: return "use --stat tf or --stat td";
    case ErrorCode::FileNotFound: return "check the path";
    default: return {};
  }
}

}  // namespace

unsigned bench_threads() {
  if (const char* env = std::getenv("DEA_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Direct-effect analysis: fit, test, project, decompose, simulate, bench"};
  app.require_subcommand(1);
  Options o;

  auto add_data = [&o](CLI::App* sub) {
    sub->add_option("--input", o.input, "CSV file with a header line");
    sub->add_option("--x-cols", o.x_cols, "X columns: names or prefix:<p>, comma separated (default x<digits>)");
    sub->add_option("--y-cols", o.y_cols, "Y columns (default y<digits>)");
    sub->add_option("--z-cols", o.z_cols, "Z columns (default z<digits>)");
    sub->add_option("--ridge", o.ridge, "ridge added to the constraint matrix")->capture_default_str();
    sub->add_option("--regressor", o.regressor, "ols or knn")->capture_default_str();
    sub->add_option("--knn-k", o.knn_k, "neighbours for knn")->capture_default_str();
  };

  auto* fit = app.add_subcommand("fit", "fit a model and write it as JSON");
  add_data(fit);
  fit->add_option("--output", o.output, "model JSON path");
  fit->add_option("--stat", o.stat, "ts|tf|td|pcca")->capture_default_str();
  fit->add_option("--components", o.components, "number of directions")->capture_default_str();
  fit->add_option("--alpha", o.alpha, "level for the summary test");

  auto* test = app.add_subcommand("test", "conditional independence test, printed as JSON");
  add_data(test);
  test->add_option("--stat", o.stat, "tf|td, or fisher-z for the per-column baseline")->capture_default_str();
  test->add_option("--alpha", o.alpha, "test level (default 0.05)");
  test->add_option("--model", o.model, "test a fitted model instead of --input");

  auto* proj = app.add_subcommand("project", "write Y W for a fitted model");
  proj->add_option("--input", o.input, "CSV holding the model's Y columns");
  proj->add_option("--model", o.model, "model JSON");
  proj->add_option("--output", o.output, "CSV path (stdout if omitted)");

  auto* dec = app.add_subcommand("decompose", "split Y into forced and internal parts");
  dec->add_option("--input", o.input, "CSV holding the model's Y columns");
  dec->add_option("--model", o.model, "model JSON");
  dec->add_option("--output", o.output, "base path; writes <base>_forced.csv and <base>_internal.csv");

  auto* sim = app.add_subcommand("simulate", "draw a synthetic data set");
  sim->add_option("--scm-config", o.scm_config, "SCM config JSON");
  sim->add_option("--seed", o.seed, "overrides the config seed");
  sim->add_option("--output", o.output, "CSV path (stdout if omitted)");

  auto* bench_cmd = app.add_subcommand("bench", "run a simulation campaign");
  bench_cmd->add_option("--plan", o.plan, "experiment plan JSON");
  bench_cmd->add_option("--seed", o.seed, "overrides the plan master_seed");
  bench_cmd->add_option("--output", o.output, "base path; writes <base>.csv and <base>.json");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(o, out, err);
    if (test->parsed()) return cmd_test(o, out, err);
    if (proj->parsed()) return cmd_project(o, out, err);
    if (dec->parsed()) return cmd_decompose(o, out, err);
    if (sim->parsed()) return cmd_simulate(o, out, err);
    if (bench_cmd->parsed()) return cmd_bench(o, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (const auto h = hint(e.code()); !h.empty()) err << "hint: " << h << "\n";
    return e.is_numerical() ? kExitNumerical : kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace dea::cli
