#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pbc/pbc.hpp"

namespace pbc::cli {
namespace {

/// Domain-level failure that maps to exit code 1 (e.g. oracle gap too large).
struct ToleranceFailure {};

struct DistArgs {
  std::string kind = "gaussian";
  double mu = 10.0;
  double sd = 3.0;
  double value = 1.0;
  double shape = 2.0;
  double scale = 2.2;
  std::string costs_csv;
  std::string fit_json;
};

struct ProcessArgs {
  double lambda = 1.0;
  std::string rate_table;
  double horizon = 1.0;
  double gamma = 0.0;
  double sigma = 0.0;
};

struct EngineArgs {
  std::size_t paths = 100000;
  std::int64_t seed = 1;
  unsigned threads = 0;
  std::string strike_mode = "expected-total";
  std::optional<double> discount_rate;
  double discount_tau = 0.0;
};

struct OutputArgs {
  std::string out;
  std::string format = "csv";
};

void add_dist_options(CLI::App& app, DistArgs& d) {
  app.add_option("--dist", d.kind, "Jump law")
      ->check(CLI::IsMember({"gaussian", "constant", "weibull-log", "empirical"}))
      ->capture_default_str();
  app.add_option("--mu", d.mu, "Gaussian jump mean (EUR)")->capture_default_str();
  app.add_option("--sd", d.sd, "Gaussian jump standard deviation (EUR)")->capture_default_str();
  app.add_option("--value", d.value, "Constant jump height (EUR)")->capture_default_str();
  app.add_option("--shape", d.shape, "Weibull shape k of ln(cost)")->capture_default_str();
  app.add_option("--scale", d.scale, "Weibull scale of ln(cost)")->capture_default_str();
  app.add_option("--costs", d.costs_csv, "Cost CSV for the empirical law");
  app.add_option("--fit-json", d.fit_json, "Fit JSON written by `fit --out` (implies weibull-log)");
}

void add_process_options(CLI::App& app, ProcessArgs& p, bool with_lambda) {
  if (with_lambda) {
    app.add_option("--lambda", p.lambda, "Constant failure rate per unit time")
        ->capture_default_str();
    app.add_option("--rate-table", p.rate_table, "CSV `t,lambda` piecewise-linear rate");
  }
  app.add_option("--horizon", p.horizon, "Contract horizon T")->capture_default_str();
  app.add_option("--gamma", p.gamma, "Drift per unit time (EUR)")->capture_default_str();
  app.add_option("--sigma", p.sigma, "Diffusion scale (EUR per sqrt time)")->capture_default_str();
}

void add_engine_options(CLI::App& app, EngineArgs& e) {
  app.add_option("--paths", e.paths, "Monte Carlo path count")->capture_default_str();
  app.add_option("--seed", e.seed, "Master seed")->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--threads", e.threads, "Worker threads (0 = auto)")->capture_default_str();
  app.add_option("--strike-mode", e.strike_mode, "Strike convention")
      ->check(CLI::IsMember({"expected-total", "single-jump-mean"}))
      ->capture_default_str();
  app.add_option("--discount-rate", e.discount_rate, "Depreciation rate for discounting");
  app.add_option("--discount-tau", e.discount_tau, "Discount period tau")->capture_default_str();
}

void add_output_options(CLI::App& app, OutputArgs& o) {
  app.add_option("--out", o.out, "Machine-readable output file");
  app.add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
}

std::string num(double v) { return format_double(v); }

JumpDistribution load_fit_json(const std::string& path) {
  auto in = detail::open_for_read(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
    return JumpDistribution::weibull_log(doc.at("shape").get<double>(), doc.at("scale").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, "", "fit JSON '" + path + "': " + e.what());
  }
}

JumpDistribution make_distribution(const DistArgs& d) {
  if (!d.fit_json.empty()) return load_fit_json(d.fit_json);
  if (d.kind == "gaussian") return JumpDistribution::gaussian(d.mu, d.sd);
  if (d.kind == "constant") return JumpDistribution::constant(d.value);
  if (d.kind == "weibull-log") return JumpDistribution::weibull_log(d.shape, d.scale);
  detail::require(!d.costs_csv.empty(), "--dist empirical requires --costs FILE");
  const auto records = parse_cost_csv(std::filesystem::path(d.costs_csv));
  return empirical_from_records(records);
}

ProcessParams make_process(const ProcessArgs& p) {
  ProcessParams params;
  params.drift = p.gamma;
  params.sigma = p.sigma;
  params.horizon = p.horizon;
  if (!p.rate_table.empty()) {
    auto in = detail::open_for_read(p.rate_table);
    params.rate = parse_rate_csv(in);
  } else {
    params.rate = ConstantRate{p.lambda};
  }
  params.validate();
  return params;
}

PricingOptions make_pricing_options(const EngineArgs& e) {
  detail::require(e.paths >= 2, "--paths must be >= 2");
  PricingOptions opts;
  opts.strike_mode =
      e.strike_mode == "single-jump-mean" ? StrikeMode::SingleJumpMean : StrikeMode::ExpectedTotal;
  opts.monte_carlo.n_paths = e.paths;
  opts.monte_carlo.master_seed = static_cast<std::uint64_t>(e.seed);
  opts.monte_carlo.threads = e.threads;
  if (e.discount_rate) {
    detail::require(e.discount_tau >= 0.0, "--discount-tau must be >= 0");
    opts.discount = Discount{*e.discount_rate, e.discount_tau};
  }
  return opts;
}

TableFormat table_format(const std::string& s) {
  return s == "json" ? TableFormat::Json : TableFormat::Csv;
}

void emit(const ResultTable& table, const OutputArgs& o) {
  if (o.out.empty()) return;
  export_results(table, table_format(o.format), std::filesystem::path(o.out));
}

/// Inclusive grid `a:b:step`.
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    double v = 0.0;
    detail::require(detail::parse_double(item, v), "--lambda-grid: malformed number '" + item + "'");
    parts.push_back(v);
  }
  detail::require(parts.size() == 3, "--lambda-grid must have the form a:b:step");
  const double a = parts[0];
  const double b = parts[1];
  const double step = parts[2];
  detail::require(a >= 0.0, "--lambda-grid: start must be >= 0");
  detail::require(b >= a, "--lambda-grid: end must be >= start");
  detail::require(step > 0.0, "--lambda-grid: step must be > 0");
  const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
  detail::require(n <= 100000, "--lambda-grid: too many points");
  std::vector<double> grid;
  for (std::size_t i = 0; i < n; ++i) grid.push_back(a + static_cast<double>(i) * step);
  return grid;
}

const std::vector<std::string> kPricingColumns = {
    "lambda", "horizon", "premium_C", "expected_cost", "strike_K", "total_price_P",
    "std_error", "n_paths", "seed"};

double average_rate(const ProcessParams& params) {
  return cumulative_rate(params.rate, params.horizon) / params.horizon;
}

std::vector<Cell> pricing_row(const ProcessParams& params, const PricingResult& r) {
  return {average_rate(params),
          params.horizon,
          r.premium_C,
          r.expected_cost,
          r.strike_K,
          r.total_price_P,
          r.std_error,
          static_cast<std::int64_t>(r.n_paths),
          static_cast<std::int64_t>(r.master_seed)};
}

void print_pricing(std::ostream& out, const ProcessParams& params, const JumpDistribution& dist,
                   const PricingResult& r) {
  out << "jump law       " << dist.name() << '\n'
      << "lambda         " << num(average_rate(params)) << '\n'
      << "horizon        " << num(params.horizon) << '\n'
      << "premium C      " << num(r.premium_C) << '\n'
      << "expected E[X]  " << num(r.expected_cost) << '\n'
      << "strike K       " << num(r.strike_K) << '\n'
      << "total price P  " << num(r.total_price_P) << '\n'
      << "std error      " << num(r.std_error) << '\n'
      << "paths          " << r.n_paths << '\n'
      << "seed           " << r.master_seed << '\n';
  if (r.discount_applied) out << "discounted     yes\n";
}

int cmd_fit(const std::string& input, const OutputArgs& o, std::ostream& out) {
  const auto records = parse_cost_csv(std::filesystem::path(input));
  const auto fit = fit_weibull_log(std::span<const CostRecord>(records));
  out << "weibull fit of ln(cost)\n"
      << "shape k        " << num(fit.shape) << '\n'
      << "scale          " << num(fit.scale) << '\n'
      << "log-likelihood " << num(fit.log_likelihood) << '\n'
      << "samples        " << fit.n_samples << '\n'
      << "KS statistic   " << num(fit.ks_statistic) << '\n';
  if (!o.out.empty()) {
    nlohmann::ordered_json doc;
    doc["dist"] = "weibull-log";
    doc["shape"] = fit.shape;
    doc["scale"] = fit.scale;
    doc["log_likelihood"] = fit.log_likelihood;
    doc["n_samples"] = fit.n_samples;
    doc["ks_statistic"] = fit.ks_statistic;
    auto file = detail::open_for_write(o.out);
    file << doc.dump(2) << '\n';
    if (!file) throw IoError("write failed for '" + o.out + "'");
  }
  return kExitOk;
}

int cmd_price(const DistArgs& d, const ProcessArgs& p, const EngineArgs& e, const OutputArgs& o,
              std::ostream& out) {
  const auto dist = make_distribution(d);
  const auto params = make_process(p);
  const auto opts = make_pricing_options(e);
  const auto result = price_contract(params, dist, opts);
  print_pricing(out, params, dist, result);
  ResultTable table{kPricingColumns, {}};
  table.add_row(pricing_row(params, result));
  emit(table, o);
  return kExitOk;
}

int cmd_sweep(const DistArgs& d, ProcessArgs p, const EngineArgs& e, const std::string& grid_spec,
              const OutputArgs& o, std::ostream& out) {
  const auto dist = make_distribution(d);
  const auto grid = parse_grid(grid_spec);
  auto opts = make_pricing_options(e);
  p.rate_table.clear();
  // Validate every grid point before simulating anything.
  std::vector<ProcessParams> points;
  for (double lambda : grid) {
    p.lambda = lambda;
    points.push_back(make_process(p));
  }
  ResultTable table{kPricingColumns, {}};
  out << "lambda,premium_C,expected_cost,total_price_P,std_error\n";
  for (std::size_t j = 0; j < points.size(); ++j) {
    opts.monte_carlo.master_seed = static_cast<std::uint64_t>(e.seed) + j;
    const auto r = price_contract(points[j], dist, opts);
    table.add_row(pricing_row(points[j], r));
    out << num(grid[j]) << ',' << num(r.premium_C) << ',' << num(r.expected_cost) << ','
        << num(r.total_price_P) << ',' << num(r.std_error) << '\n';
  }
  emit(table, o);
  return kExitOk;
}

int cmd_oracle(const DistArgs& d, const ProcessArgs& p, const EngineArgs& e, double tolerance,
               std::size_t max_terms, const OutputArgs& o, std::ostream& out) {
  const auto dist = make_distribution(d);
  if (!dist.is<GaussianJump>() && !dist.is<ConstantJump>()) {
    throw UnsupportedError("jump law '" + std::string(dist.name()) +
                           "' is unsupported by oracle (needs closed-form convolutions: "
                           "gaussian or constant)");
  }
  detail::require(p.rate_table.empty(), "oracle requires a constant --lambda");
  detail::require(p.sigma == 0.0, "oracle requires --sigma 0");
  detail::require(tolerance >= 0.0, "--tolerance must be >= 0");
  const auto params = make_process(p);
  const auto opts = make_pricing_options(e);
  const auto mc = price_contract(params, dist, opts);

  SeriesControl ctrl;
  ctrl.max_terms = max_terms;
  const double lambda = std::get<ConstantRate>(params.rate).lambda;
  // Drift shifts X_T by gamma*T, equivalent to lowering the strike.
  double series = series_premium(dist, lambda, params.horizon,
                                 mc.strike_K - params.drift * params.horizon, ctrl);
  if (mc.discount_applied) series = discounted_premium(series, *e.discount_rate, e.discount_tau);

  const double gap = std::abs(mc.premium_C - series);
  const double allowed = std::max(3.0 * mc.std_error, tolerance * std::abs(series));
  const bool pass = gap <= allowed;
  const double se_multiple = mc.std_error > 0.0 ? gap / mc.std_error : (gap == 0.0 ? 0.0 : INFINITY);
  out << "monte carlo    " << num(mc.premium_C) << " (se " << num(mc.std_error) << ")\n"
      << "series oracle  " << num(series) << '\n'
      << "abs gap        " << num(gap) << '\n'
      << "rel gap        " << num(series != 0.0 ? gap / std::abs(series) : 0.0) << '\n'
      << "gap / se       " << num(se_multiple) << '\n'
      << "allowed gap    " << num(allowed) << '\n'
      << "result         " << (pass ? "PASS" : "FAIL") << '\n';
  ResultTable table{{"lambda", "horizon", "strike_K", "mc_premium", "std_error", "series_premium",
                     "abs_gap", "allowed_gap", "pass"},
                    {}};
  table.add_row({lambda, params.horizon, mc.strike_K, mc.premium_C, mc.std_error, series, gap,
                 allowed, std::int64_t{pass ? 1 : 0}});
  emit(table, o);
  if (!pass) throw ToleranceFailure{};
  return kExitOk;
}

int cmd_simulate(const DistArgs& d, const ProcessArgs& p, std::int64_t seed, std::size_t count,
                 std::size_t steps, const OutputArgs& o, std::ostream& out) {
  const auto dist = make_distribution(d);
  const auto params = make_process(p);
  detail::require(count >= 1, "--count must be >= 1");
  detail::require(steps >= 1, "--steps must be >= 1");
  ResultTable table{{"path", "t", "X"}, {}};
  for (std::size_t i = 0; i < count; ++i) {
    RandomStream stream(static_cast<std::uint64_t>(seed), i);
    const auto points = sample_step_path(params, dist, steps, stream);
    for (const auto& pt : points) {
      table.add_row({static_cast<std::int64_t>(i), pt.t, pt.value});
    }
    const std::size_t jumps = (points.size() - steps - 1) / 2;
    out << "path " << i << ": jumps " << jumps << ", X_T " << num(points.back().value) << '\n';
  }
  emit(table, o);
  return kExitOk;
}

int cmd_generate(const DistArgs& d, double lambda, std::size_t units, double window,
                 std::int64_t seed, const std::string& path, std::ostream& out) {
  const auto dist = make_distribution(d);
  const auto records =
      generate_synthetic_fleet(lambda, dist, units, window, static_cast<std::uint64_t>(seed));
  if (!path.empty()) write_cost_csv(records, std::filesystem::path(path));
  const auto summary = estimate_failure_rate(records, units, window);
  out << "units          " << units << '\n'
      << "window days    " << num(window) << '\n'
      << "events         " << summary.n_events << '\n'
      << "lambda hat     " << num(summary.lambda_hat) << " per unit-year\n"
      << "mean cost      " << num(summary.mean_cost) << '\n';
  return kExitOk;
}

int cmd_summary(const std::string& input, std::size_t units, double window, std::ostream& out) {
  const auto records = parse_cost_csv(std::filesystem::path(input));
  const auto s = estimate_failure_rate(records, units, window);
  out << "units          " << s.n_units << '\n'
      << "window days    " << num(s.observation_window_days) << '\n'
      << "events         " << s.n_events << '\n'
      << "lambda hat     " << num(s.lambda_hat) << " per unit-year\n"
      << "mean cost      " << num(s.mean_cost) << '\n';
  for (const auto& q : s.cost_quantiles) {
    out << "q" << std::setw(2) << std::setfill('0') << static_cast<int>(q.probability * 100 + 0.5)
        << std::setfill(' ') << "            " << num(q.value) << '\n';
  }
  if (s.no_events) out << "warning: no events recorded; lambda hat is 0\n";
  return kExitOk;
}

unsigned default_threads() {
  if (const char* env = std::getenv(kThreadsEnv)) {
    std::int64_t v = 0;
    if (detail::parse_int64(env, v) && v >= 0 && v <= 4096) return static_cast<unsigned>(v);
  }
  return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Performance-based contract pricing via compound Poisson Monte Carlo", "pbc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "pbc 1.0.0");

  DistArgs dist;
  ProcessArgs proc;
  EngineArgs engine;
  engine.threads = default_threads();
  OutputArgs output;

  std::string fit_input;
  auto* fit = app.add_subcommand("fit", "Fit a Weibull law to ln(cost) of a cost CSV");
  fit->add_option("--input,input", fit_input, "Cost CSV (unit_id,event_time_days,cost_eur)")
      ->required();
  fit->add_option("--out", output.out, "Write fit parameters as JSON");

  auto* price = app.add_subcommand("price", "Monte Carlo risk premium and total contract price");
  add_dist_options(*price, dist);
  add_process_options(*price, proc, true);
  add_engine_options(*price, engine);
  add_output_options(*price, output);

  std::string grid;
  auto* sweep = app.add_subcommand("sweep", "Price over a grid of failure rates");
  add_dist_options(*sweep, dist);
  add_process_options(*sweep, proc, false);
  add_engine_options(*sweep, engine);
  add_output_options(*sweep, output);
  sweep->add_option("--lambda-grid", grid, "Inclusive grid a:b:step")->required();

  double tolerance = 0.005;
  std::size_t max_terms = 200;
  auto* oracle = app.add_subcommand("oracle", "Compare Monte Carlo with the series oracle");
  add_dist_options(*oracle, dist);
  add_process_options(*oracle, proc, true);
  add_engine_options(*oracle, engine);
  add_output_options(*oracle, output);
  oracle->add_option("--tolerance", tolerance, "Declared relative tolerance")->capture_default_str();
  oracle->add_option("--max-terms", max_terms, "Series term limit")->capture_default_str();

  std::size_t count = 1;
  std::size_t steps = 100;
  std::int64_t sim_seed = 1;
  auto* simulate = app.add_subcommand("simulate", "Emit step-function sample paths for plotting");
  add_dist_options(*simulate, dist);
  add_process_options(*simulate, proc, true);
  add_output_options(*simulate, output);
  simulate->add_option("--seed", sim_seed, "Master seed")->check(CLI::NonNegativeNumber);
  simulate->add_option("--count", count, "Number of paths")->capture_default_str();
  simulate->add_option("--steps", steps, "Grid intervals per path")->capture_default_str();

  double gen_lambda = 1.0;
  std::size_t units = 100;
  double window = 365.0;
  std::int64_t gen_seed = 1;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Write a synthetic fleet cost CSV");
  add_dist_options(*generate, dist);
  generate->add_option("--lambda", gen_lambda, "Failures per unit-year")->capture_default_str();
  generate->add_option("--units", units, "Fleet size")->capture_default_str();
  generate->add_option("--window", window, "Observation window (days)")->capture_default_str();
  generate->add_option("--seed", gen_seed, "Master seed")->check(CLI::NonNegativeNumber);
  generate->add_option("--out", gen_out, "Cost CSV output file");

  std::string summary_input;
  auto* summary = app.add_subcommand("summary", "Failure rate and cost statistics of a cost CSV");
  summary->add_option("--input,input", summary_input, "Cost CSV")->required();
  summary->add_option("--units", units, "Fleet size")->required();
  summary->add_option("--window", window, "Observation window (days)")->required();

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(fit_input, output, out);
    if (price->parsed()) return cmd_price(dist, proc, engine, output, out);
    if (sweep->parsed()) return cmd_sweep(dist, proc, engine, grid, output, out);
    if (oracle->parsed()) return cmd_oracle(dist, proc, engine, tolerance, max_terms, output, out);
    if (simulate->parsed()) return cmd_simulate(dist, proc, sim_seed, count, steps, output, out);
    if (generate->parsed()) return cmd_generate(dist, gen_lambda, units, window, gen_seed, gen_out, out);
    if (summary->parsed()) return cmd_summary(summary_input, units, window, out);
  } catch (const ToleranceFailure&) {
    err << "error: Monte Carlo and series oracle disagree beyond tolerance\n";
    return kExitFailure;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UnsupportedError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace pbc::cli
