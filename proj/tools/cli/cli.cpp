#include "cli.hpp"

#include <chrono>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "ehub/assembly.hpp"
#include "ehub/dispatch.hpp"
#include "ehub/format.hpp"
#include "ehub/oracle.hpp"
#include "manifest.hpp"
#include "svg.hpp"

namespace ehub::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

struct Globals {
  std::string out = "ehub_out";
  std::optional<unsigned> seed;  // reserved: every command is deterministic
  bool quiet = false;
};

struct Io {
  std::ostream& out;
  std::ostream& err;
  const Globals& globals;

  std::ostream& info() {
    static std::ostringstream sink;
    sink.str({});
    return globals.quiet ? sink : out;
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json options_json(const Globals& g) {
  Json j;
  j["out"] = g.out;
  j["seed"] = optional_json(g.seed);
  return j;
}

// Files the series references of `hub` resolve to, in reference order.
std::vector<fs::path> series_files(const HubTopology& hub, const std::optional<std::string>& series_dir) {
  const fs::path base = series_dir ? fs::path(*series_dir) : hub.base_dir;
  std::vector<fs::path> files;
  auto resolve = [&](const std::string& ref) {
    std::string target = ref;
    for (const auto& [name, path] : hub.series)
      if (name == ref) target = path;
    target = target.substr(0, target.find('#'));
    fs::path p(target);
    if (p.is_relative()) p = base / p;
    if (std::find(files.begin(), files.end(), p) == files.end()) files.push_back(p);
  };
  for (const auto& in : hub.inputs) resolve(in.price_series);
  for (const auto& out : hub.outputs) resolve(out.demand_series);
  return files;
}

HubTopology load_valid_hub(const std::string& file) {
  HubTopology hub = load_hub(file);
  const ValidationReport report = validate_topology(hub);
  if (!report.ok()) throw HubError("invalid hub:\n" + report.to_string());
  return hub;
}

LinearizeOptions linearize_options(const std::optional<int>& segments) {
  LinearizeOptions lo;
  lo.segments = segments;
  return lo;
}

int cmd_validate(Io& io, const std::string& file) {
  const auto start = Clock::now();
  ParseOptions po;
  po.check_carriers = false;  // mismatches are reported as violations below
  const HubTopology hub = load_hub(file, po);
  const ValidationReport report = validate_topology(hub);
  RunManifest manifest("validate", options_json(io.globals));
  manifest.add_input(file);
  Json result;
  result["valid"] = report.ok();
  auto list = Json::array();
  for (const auto& v : report.violations) list.push_back({{"code", v.code}, {"message", v.message}, {"subjects", v.subjects}});
  result["violations"] = list;
  manifest.write_output(io.globals.out, "validation.json", result.dump(2) + "\n");
  manifest.set_seconds(seconds_since(start));
  manifest.save(io.globals.out);
  if (!report.ok()) {
    io.err << report.to_string();
    return violations;
  }
  io.info() << "valid: " << hub.nodes.size() << " nodes, " << hub.branches.size() << " branches, "
            << hub.inputs.size() << " inputs, " << hub.outputs.size() << " outputs\n";
  return ok;
}

Json curve_json(const LinearizedComponent& lc, const LinearizedCurve& c) {
  Json j;
  j["kind"] = to_string(c.kind);
  j["argument_port"] = lc.port_names.at(c.argument_port);
  j["value_port"] = c.value_port ? Json(lc.port_names.at(*c.value_port)) : Json(nullptr);
  j["breakpoints"] = c.domain.breakpoints;
  j["values"] = c.values;
  j["secants"] = c.secants;
  return j;
}

int cmd_linearize(Io& io, const std::string& file, const std::optional<int>& segments) {
  const auto start = Clock::now();
  const HubTopology hub = load_valid_hub(file);
  const LinearizedHub lin = linearize_hub(hub, linearize_options(segments));
  Json comps = Json::array();
  for (const auto& lc : lin.components) {
    Json j;
    j["node"] = lc.node_id;
    j["kind"] = to_string(lc.kind);
    j["segments"] = lc.segments;
    j["secondaries"] = lc.secondary_count();
    if (lc.mapping) j["mapping"] = {{"kappa", lc.mapping->kappa}, {"swapped", lc.mapping->swapped}};
    Json curves = Json::array();
    for (const auto& c : lc.curves) curves.push_back(curve_json(lc, c));
    j["curves"] = curves;
    comps.push_back(j);
    io.info() << lc.node_id << ": " << to_string(lc.kind) << ", s=" << lc.segments << ", "
              << lc.secondary_count() << " secondary branches\n";
  }
  Json labels = Json::array();
  for (const auto& s : lin.secondaries) labels.push_back(s.label);
  Json doc{{"components", comps}, {"secondary_branches", labels}};

  Json opts = options_json(io.globals);
  opts["hub"] = file;
  opts["segments"] = optional_json(segments);
  RunManifest manifest("linearize", opts);
  manifest.add_input(file);
  manifest.write_output(io.globals.out, "linearization.json", doc.dump(2) + "\n");
  manifest.set_seconds(seconds_since(start));
  manifest.save(io.globals.out);
  return ok;
}

int cmd_assemble(Io& io, const std::string& file, const std::optional<int>& segments) {
  const auto start = Clock::now();
  const HubTopology hub = load_valid_hub(file);
  const LinearizedHub lin = linearize_hub(hub, linearize_options(segments));
  const EnergyFlowSystem sys = assemble_system(lin);

  Json opts = options_json(io.globals);
  opts["hub"] = file;
  opts["segments"] = optional_json(segments);
  RunManifest manifest("assemble", opts);
  manifest.add_input(file);
  const fs::path dir = io.globals.out;
  manifest.write_output(dir, "X.json", matrix_json(sys.X));
  manifest.write_output(dir, "Y.json", matrix_json(sys.Y));
  manifest.write_output(dir, "Z.json", matrix_json(sys.Z));
  manifest.write_output(dir, "W.json", matrix_json(sys.W));
  LabeledMatrix stacked{sys.stacked(), sys.row_labels(), sys.index.labels()};
  manifest.write_output(dir, "system.json", matrix_json(stacked));
  Json branches{{"primary_count", sys.index.primary_count()}, {"labels", sys.index.labels()}};
  manifest.write_output(dir, "branches.json", branches.dump(2) + "\n");
  for (const auto& block : sys.nodes) {
    const std::string id = sanitize_identifier(lin.topology.nodes[block.node].id);
    manifest.write_output(dir, "nodes/" + id + "_A.json", matrix_json(block.A));
    manifest.write_output(dir, "nodes/" + id + "_H.json", matrix_json(block.H));
    manifest.write_output(dir, "nodes/" + id + "_Z.json", matrix_json(block.Z));
    if (block.W) manifest.write_output(dir, "nodes/" + id + "_W.json", matrix_json(*block.W));
  }
  manifest.set_seconds(seconds_since(start));
  manifest.save(dir);
  io.info() << sys.rows() << " x " << sys.cols() << " energy-flow system (" << sys.index.primary_count()
            << " primary, " << sys.index.secondary_count() << " secondary branches)\n";
  return ok;
}

struct OptimizeArgs {
  std::string hub;
  std::optional<int> segments;
  std::optional<std::string> series_dir;
  std::optional<std::size_t> horizon;
  double gap = 1e-6;
  std::optional<double> time_limit;
  bool constant_approx = false;
  std::optional<std::string> export_lp;
  std::optional<std::string> import_solution;
};

DispatchProblem make_problem(const HubTopology& hub, const SeriesData& series, const std::optional<int>& segments,
                             bool constant_approx) {
  const HubTopology model = constant_approx ? constant_approximation(hub) : hub;
  return build_dispatch_problem(linearize_hub(model, linearize_options(segments)), series, series.periods());
}

// "name value" lines in the format --import-solution reads.
std::string solution_values(const DispatchProblem& problem, const DispatchSolution& sol) {
  const std::vector<std::string> names = lp_names(problem.model);
  std::string text;
  for (std::size_t j = 0; j < names.size(); ++j) text += names[j] + ' ' + format_double(sol.values[j]) + '\n';
  return text;
}

int cmd_optimize(Io& io, const OptimizeArgs& a) {
  const auto start = Clock::now();
  const HubTopology hub = load_valid_hub(a.hub);
  const SeriesData series = load_series(hub, a.series_dir, a.horizon);
  const DispatchProblem problem = make_problem(hub, series, a.segments, a.constant_approx);

  Json opts = options_json(io.globals);
  opts["hub"] = a.hub;
  opts["segments"] = optional_json(a.segments);
  opts["series_dir"] = optional_json(a.series_dir);
  opts["horizon"] = optional_json(a.horizon);
  opts["gap"] = a.gap;
  opts["time_limit"] = optional_json(a.time_limit);
  opts["constant_approx"] = a.constant_approx;
  opts["export_lp"] = optional_json(a.export_lp);
  opts["import_solution"] = optional_json(a.import_solution);
  RunManifest manifest("optimize", opts);
  manifest.add_input(a.hub);
  for (const auto& f : series_files(hub, a.series_dir)) manifest.add_input(f);
  const fs::path dir = io.globals.out;
  if (a.export_lp) manifest.write_output(dir, *a.export_lp, problem.model.to_lp_format());

  DispatchSolution sol;
  if (a.import_solution) {
    manifest.add_input(*a.import_solution);
    sol = import_solution(problem, *a.import_solution);
  } else {
    SolveOptions so;
    so.relative_gap = a.gap;
    so.time_limit_seconds = a.time_limit;
    sol = solve(problem, so);
  }
  if (sol.status == SolveStatus::infeasible) {
    io.err << "infeasible: no dispatch meets every demand under the component limits\n";
    manifest.set_seconds(seconds_since(start));
    manifest.save(dir);
    return infeasible;
  }

  if (sol.values.empty()) {
    io.err << "no feasible dispatch found before the " << to_string(sol.status) << " was reached\n";
    manifest.set_seconds(seconds_since(start));
    manifest.save(dir);
    return violations;
  }

  const DispatchSchedule schedule = extract_schedule(problem, sol);
  Json result;
  result["status"] = to_string(sol.status);
  result["objective"] = sol.objective;
  result["bound"] = sol.bound;
  result["root_bound"] = sol.root_bound;
  result["gap"] = sol.gap;
  result["nodes"] = sol.nodes;
  result["lp_iterations"] = sol.lp_iterations;
  result["periods"] = problem.periods;
  result["variables"] = problem.model.variables().size();
  result["rows"] = problem.model.rows().size();
  result["binaries"] = problem.model.binary_count();
  result["flow_residual"] = flow_residual(problem, sol);
  result["fill_order_violation"] = fill_order_violation(problem, sol);
  result["max_violation"] = problem.model.max_violation(sol.values);
  manifest.write_output(dir, "schedule.csv", schedule_csv(schedule));
  manifest.write_output(dir, "solution.json", result.dump(2) + "\n");
  manifest.write_output(dir, "solution.sol", solution_values(problem, sol));
  manifest.set_seconds(seconds_since(start));
  manifest.save(dir);

  io.out << "status " << to_string(sol.status) << "\n";
  io.out << "objective " << format_double(sol.objective) << "\n";
  io.out << "gap " << format_double(sol.gap) << "\n";
  return ok;
}

struct SweepArgs {
  std::string hub;
  std::vector<int> segments;
  std::optional<std::string> series_dir;
  std::optional<std::size_t> horizon;
  double gap = 1e-6;
  std::optional<double> time_limit;
  std::optional<double> reference_cost;
  int reference_segments = kReferenceSegments;
  bool with_constant = false;
  int parallel = 1;
};

struct SweepRun {
  std::optional<int> segments;  // unset for the constant-efficiency run
  DispatchSolution solution;
  double seconds = 0;
};

SweepRun sweep_run(const HubTopology& hub, const SeriesData& series, std::optional<int> segments, double gap,
                   std::optional<double> time_limit) {
  const auto start = Clock::now();
  const DispatchProblem problem = make_problem(hub, series, segments.value_or(1), !segments.has_value());
  SolveOptions so;
  so.relative_gap = gap;
  so.time_limit_seconds = time_limit;
  SweepRun run{segments, solve(problem, so), 0.0};
  run.seconds = seconds_since(start);
  return run;
}

int cmd_sweep(Io& io, const SweepArgs& a) {
  const auto start = Clock::now();
  const HubTopology hub = load_valid_hub(a.hub);
  const SeriesData series = load_series(hub, a.series_dir, a.horizon);

  std::vector<std::optional<int>> jobs(a.segments.begin(), a.segments.end());
  if (a.with_constant) jobs.emplace_back(std::nullopt);
  std::vector<SweepRun> runs(jobs.size());
  const std::size_t workers = static_cast<std::size_t>(std::max(1, a.parallel));
  for (std::size_t first = 0; first < jobs.size(); first += workers) {
    std::vector<std::future<SweepRun>> batch;
    for (std::size_t k = first; k < std::min(jobs.size(), first + workers); ++k)
      batch.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, sweep_run,
                                 std::cref(hub), std::cref(series), jobs[k], a.gap, a.time_limit));
    for (std::size_t k = 0; k < batch.size(); ++k) runs[first + k] = batch[k].get();
  }

  const double reference = a.reference_cost
                               ? *a.reference_cost
                               : reference_dispatch(hub, series, series.periods(), {}, a.reference_segments);

  std::ostringstream csv;
  csv << "s,cost,relative_error,wall_time\n";
  Json summary;
  summary["reference"] = {{"segments", a.reference_cost ? Json(nullptr) : Json(a.reference_segments)},
                          {"cost", reference}};
  Json list = Json::array();
  std::vector<SweepPoint> points;
  for (const auto& run : runs) {
    const std::string label = run.segments ? std::to_string(*run.segments) : "constant";
    const std::string status(to_string(run.solution.status));
    if (run.solution.values.empty()) {  // infeasible, or a limit hit before any incumbent
      csv << label << ",,," << format_double(run.seconds) << '\n';
      list.push_back({{"s", label}, {"status", status}, {"cost", nullptr}, {"relative_error", nullptr},
                      {"signed_error", nullptr}, {"nodes", run.solution.nodes}});
      io.info() << std::setw(9) << label << "  " << status << "\n";
      continue;
    }
    const double cost = run.solution.objective;
    const double rel = reference != 0.0 ? std::abs(cost - reference) / std::abs(reference) * 100.0 : 0.0;
    csv << label << ',' << format_double(cost) << ',' << format_double(rel) << ',' << format_double(run.seconds)
        << '\n';
    list.push_back({{"s", label},
                    {"status", status},
                    {"cost", cost},
                    {"relative_error", rel},
                    {"signed_error", reference != 0.0 ? (cost - reference) / std::abs(reference) * 100.0 : 0.0},
                    {"nodes", run.solution.nodes}});
    if (run.segments) points.push_back({*run.segments, cost, rel, run.seconds});
    io.info() << std::setw(9) << label << "  cost " << format_double(cost) << "  error " << format_double(rel)
              << " %  time " << format_double(std::round(run.seconds * 1000.0) / 1000.0) << " s\n";
  }
  summary["runs"] = list;
  io.info() << "reference cost " << format_double(reference) << "\n";

  Json opts = options_json(io.globals);
  opts["hub"] = a.hub;
  opts["segments"] = a.segments;
  opts["series_dir"] = optional_json(a.series_dir);
  opts["horizon"] = optional_json(a.horizon);
  opts["gap"] = a.gap;
  opts["time_limit"] = optional_json(a.time_limit);
  opts["reference_cost"] = optional_json(a.reference_cost);
  opts["reference_segments"] = a.reference_segments;
  opts["with_constant"] = a.with_constant;
  opts["parallel"] = a.parallel;
  RunManifest manifest("sweep", opts);
  manifest.add_input(a.hub);
  for (const auto& f : series_files(hub, a.series_dir)) manifest.add_input(f);
  const fs::path dir = io.globals.out;
  manifest.write_output(dir, "sweep.csv", csv.str());
  manifest.write_output(dir, "sweep.json", summary.dump(2) + "\n");
  manifest.write_output(dir, "sweep.svg", sweep_svg(points));
  manifest.set_seconds(seconds_since(start));
  manifest.save(dir);
  return ok;
}

struct ReportArgs {
  std::string hub;
  std::vector<int> segments;
  int grid = 1000;
  std::optional<double> cost;
  std::optional<double> reference_cost;
};

int cmd_report(Io& io, const ReportArgs& a) {
  const auto start = Clock::now();
  const HubTopology hub = load_valid_hub(a.hub);
  std::vector<std::optional<int>> counts(a.segments.begin(), a.segments.end());
  if (counts.empty()) counts.emplace_back(std::nullopt);

  std::ostringstream csv;
  csv << "s,component,curve,max_abs_kw,mean_abs_kw\n";
  Json entries = Json::array();
  for (const auto& s : counts) {
    const LinearizedHub lin = linearize_hub(hub, linearize_options(s));
    Json curves = Json::array();
    for (const auto& lc : lin.components) {
      for (const auto& e : approximation_error(lc, a.grid).curves) {
        curves.push_back({{"component", e.component}, {"curve", e.curve}, {"max_abs", e.max_abs}, {"mean_abs", e.mean_abs}});
        csv << lc.segments << ',' << e.component << ',' << e.curve << ',' << format_double(e.max_abs) << ','
            << format_double(e.mean_abs) << '\n';
        io.info() << "s=" << lc.segments << "  " << e.component << " " << e.curve << "  max "
                  << format_double(e.max_abs) << " kW  mean " << format_double(e.mean_abs) << " kW\n";
      }
    }
    entries.push_back({{"s", optional_json(s)}, {"curves", curves}});
  }
  Json report{{"grid_points", a.grid}, {"curve_errors", entries}};
  if (a.cost && a.reference_cost) {
    const double rel = std::abs(*a.cost - *a.reference_cost) / std::abs(*a.reference_cost) * 100.0;
    report["objective"] = {{"cost", *a.cost}, {"reference_cost", *a.reference_cost}, {"relative_error_percent", rel}};
    io.info() << "relative objective error " << format_double(rel) << " %\n";
  }

  Json opts = options_json(io.globals);
  opts["hub"] = a.hub;
  opts["segments"] = a.segments;
  opts["grid"] = a.grid;
  opts["cost"] = optional_json(a.cost);
  opts["reference_cost"] = optional_json(a.reference_cost);
  RunManifest manifest("report", opts);
  manifest.add_input(a.hub);
  const fs::path dir = io.globals.out;
  manifest.write_output(dir, "error_report.json", report.dump(2) + "\n");
  manifest.write_output(dir, "errors.csv", csv.str());
  manifest.set_seconds(seconds_since(start));
  manifest.save(dir);
  return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Globals globals;
  CLI::App app{"Energy-hub modeling, piecewise linearization and dispatch optimization", "ehub"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--out", globals.out, "Output directory")->capture_default_str();
  app.add_option("--seed", globals.seed, "Reserved; all commands are deterministic");
  app.add_flag("--quiet", globals.quiet, "Only print results and errors");

  std::string hub_file;
  std::optional<int> segments;
  auto add_hub = [&](CLI::App* sub) { sub->add_option("hub", hub_file, "Hub description (JSON)")->required(); };
  auto add_segments = [&](CLI::App* sub) {
    sub->add_option("--segments", segments, "Segments per nonlinear component (overrides the file)")
        ->check(CLI::PositiveNumber);
  };

  auto* validate = app.add_subcommand("validate", "Check a hub description");
  add_hub(validate);
  auto* linearize = app.add_subcommand("linearize", "Piecewise-linearize the nonlinear components");
  add_hub(linearize);
  add_segments(linearize);
  auto* assemble = app.add_subcommand("assemble", "Write the energy-flow matrices");
  add_hub(assemble);
  add_segments(assemble);

  OptimizeArgs oa;
  auto* optimize = app.add_subcommand("optimize", "Solve the multi-period dispatch");
  add_hub(optimize);
  add_segments(optimize);
  optimize->add_option("--series-dir", oa.series_dir, "Directory for relative series files");
  optimize->add_option("--horizon", oa.horizon, "Number of periods to use")->check(CLI::PositiveNumber);
  optimize->add_option("--gap", oa.gap, "Relative optimality gap")->capture_default_str();
  optimize->add_option("--time-limit", oa.time_limit, "Solver time limit in seconds");
  optimize->add_flag("--constant-approx", oa.constant_approx, "Replace nonlinear curves by constant efficiencies");
  optimize->add_option("--export-lp", oa.export_lp, "Also write the model in LP format to this path");
  optimize->add_option("--import-solution", oa.import_solution, "Read variable values instead of solving");

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep", "Optimize over several segment counts");
  add_hub(sweep);
  sweep->add_option("--segments", sa.segments, "Segment counts, e.g. 2,4,8")->delimiter(',')->required();
  sweep->add_option("--series-dir", sa.series_dir, "Directory for relative series files");
  sweep->add_option("--horizon", sa.horizon, "Number of periods to use")->check(CLI::PositiveNumber);
  sweep->add_option("--gap", sa.gap, "Relative optimality gap")->capture_default_str();
  sweep->add_option("--time-limit", sa.time_limit, "Per-run time limit in seconds");
  sweep->add_option("--reference-cost", sa.reference_cost, "Use this reference cost instead of solving for it");
  sweep->add_option("--reference-segments", sa.reference_segments, "Segments of the reference run")
      ->capture_default_str();
  sweep->add_flag("--with-constant", sa.with_constant, "Add the constant-efficiency run");
  sweep->add_option("--parallel", sa.parallel, "Concurrent optimize jobs")->check(CLI::PositiveNumber);

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Curve approximation errors");
  add_hub(report);
  report->add_option("--segments", ra.segments, "Segment counts, e.g. 2,8,36")->delimiter(',');
  report->add_option("--grid", ra.grid, "Evaluation points per curve")->capture_default_str();
  report->add_option("--cost", ra.cost, "Objective to compare against the reference");
  report->add_option("--reference-cost", ra.reference_cost, "Reference objective");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : parse_error;
  }

  Io io{out, err, globals};
  try {
    if (*validate) return cmd_validate(io, hub_file);
    if (*linearize) return cmd_linearize(io, hub_file, segments);
    if (*assemble) return cmd_assemble(io, hub_file, segments);
    if (*optimize) {
      oa.hub = hub_file;
      oa.segments = segments;
      return cmd_optimize(io, oa);
    }
    if (*sweep) {
      sa.hub = hub_file;
      return cmd_sweep(io, sa);
    }
    if (*report) {
      ra.hub = hub_file;
      return cmd_report(io, ra);
    }
  } catch (const InfeasibleDemand& e) {
    err << "infeasible: " << e.what() << "\n";
    return infeasible;
  } catch (const ParseError& e) {
    err << "parse error at " << e.location() << ": " << e.what() << "\n";
    return parse_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return violations;
  }
  return ok;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace ehub::cli
