#include "mpk/duality.hpp"
#include "mpk/excessive.hpp"
#include "mpk/invariant_measure.hpp"
#include "mpk/model.hpp"
#include "mpk/quasivar.hpp"
#include "mpk/report.hpp"
#include "mpk/semigroup.hpp"
#include "mpk/trajectory.hpp"

#include "CLI11.hpp"

#include <Eigen/Core>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace mpk;

struct Options {
  std::string model_path;
  std::string function_name;
  double beta = 1.0;
  double alpha = 1.0;
  long paths = 10000;
  uint64_t seed = 0;
  double horizon = 8.0;
  std::string start_state;
  std::string method = "cesaro";
  std::optional<double> tolerance;
  std::string output_path;
  bool all = false;
};

struct LoadedModel {
  MarkovModel model;
  std::string digest;
};

LoadedModel read_model(const Options& opt) {
  if (opt.model_path.empty()) throw SchemaError("--model is required");
  std::ifstream in(opt.model_path, std::ios::binary);
  if (!in) throw SchemaError("cannot open model file: " + opt.model_path);
  std::ostringstream bytes;
  bytes << in.rdbuf();
  const std::string raw = bytes.str();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("model file " + opt.model_path + " is not valid JSON: " + e.what());
  }
  return {load_model(doc), content_digest(raw)};
}

const StateFunction& pick_function(const MarkovModel& model, const std::string& name) {
  const auto it = model.functions.find(name);
  if (it == model.functions.end()) {
    throw SchemaError("the model document defines no function named \"" + name +
                      "\" (--function)");
  }
  return it->second;
}

int resolve_state(const MarkovModel& model, const std::string& label) {
  const int idx = model.space.index_of(label);
  if (idx < 0) throw SchemaError("unknown state \"" + label + "\" (--start)");
  return idx;
}

void emit(const RunReport& report, const Options& opt,
          std::chrono::steady_clock::time_point started) {
  const std::string text = to_json(report).dump(2) + "\n";
  if (opt.output_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(opt.output_path, std::ios::binary);
    if (!out) throw SchemaError("cannot open output path: " + opt.output_path);
    out << text;
  }
  // timing is diagnostic only; the report itself stays byte-stable
  const auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
  std::cerr << report.command << ": " << (report.all_pass() ? "pass" : "FAIL") << " in "
            << elapsed.count() << " ms\n";
}

double tol_or(const Options& opt, double fallback) {
  return opt.tolerance ? *opt.tolerance : fallback;
}

// ---- subcommand bodies -------------------------------------------------------

void run_check_excessive(const Options& opt, RunReport& report) {
  const LoadedModel loaded = read_model(opt);
  report.model_digest = loaded.digest;
  const StateFunction& u = pick_function(loaded.model, opt.function_name);
  if (opt.beta < 0.0) throw InvariantViolation("--beta must be nonnegative");
  const double tol = tol_or(opt, 1e-10);
  report.verdicts.push_back(
      is_supermedian(loaded.model, u, opt.beta, tol).to_verdict(loaded.model, "supermedian"));
  report.verdicts.push_back(
      is_excessive(loaded.model, u, opt.beta, tol).to_verdict(loaded.model, "excessive"));
}

void run_variation(const Options& opt, RunReport& report) {
  const LoadedModel loaded = read_model(opt);
  report.model_digest = loaded.digest;
  const StateFunction& u = pick_function(loaded.model, opt.function_name);
  if (opt.beta < 0.0) throw InvariantViolation("--beta must be nonnegative");
  const auto seq = admissible_sequence_for(loaded.model, opt.horizon, 5);
  const VariationReport variation = quasimartingale_verdict(loaded.model, u, opt.beta, seq);
  report.verdicts.push_back(variation.to_verdict(loaded.model));
}

void run_decompose(const Options& opt, RunReport& report) {
  const LoadedModel loaded = read_model(opt);
  report.model_digest = loaded.digest;
  const StateFunction& u = pick_function(loaded.model, opt.function_name);
  const RaoDecomposition d = rao_decompose(loaded.model, u, opt.beta);
  Verdict v = Verdict::passing("rao-decomposition", 1e-10 * (1.0 + u.lpNorm<Eigen::Infinity>()));
  v.worst_violation = ((d.u1 - d.u2) - u).lpNorm<Eigen::Infinity>();
  v.pass = v.worst_violation <= v.tolerance;
  v.details = {{"beta", d.beta},
               {"u1", vector_json(d.u1)},
               {"u2", vector_json(d.u2)},
               {"charge_plus", vector_json(d.f_plus)},
               {"charge_minus", vector_json(d.f_minus)}};
  report.verdicts.push_back(v);
}

void run_invariance_suite(const Options& opt, RunReport& report) {
  const LoadedModel loaded = read_model(opt);
  report.model_digest = loaded.digest;
  const MarkovModel& model = loaded.model;

  const Verdict sub = check_subinvariant(model);
  report.verdicts.push_back(sub);
  if (!sub.pass) return;

  const InvariancePartition atoms = invariant_partition(model);
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& block : atoms.blocks) blocks.push_back(block);
  report.sections["invariant_partition"] = {{"blocks", blocks}, {"excluded", atoms.excluded}};

  const double tol = tol_or(opt, 1e-8);
  auto run_one = [&](const std::string& name, const StateFunction& u) {
    const EquivalenceMatrix matrix = equivalence_suite(model, u, tol);
    Verdict v = Verdict::passing("equivalence-structure[" + name + "]", matrix.tolerance);
    v.pass = matrix.structure_ok();
    v.details = to_json(matrix);
    report.verdicts.push_back(v);
  };
  if (!opt.function_name.empty()) {
    run_one(opt.function_name, pick_function(model, opt.function_name));
  } else {
    for (const auto& [name, u] : model.functions) run_one(name, u);
  }
}

nlohmann::json density_json(const DensityResult& result) {
  return {{"rho", vector_json(result.rho)},
          {"converged", result.converged},
          {"co_excessive_residual", result.co_excessive_residual},
          {"invariance_residual", result.invariance_residual},
          {"iterations", result.iterations},
          {"horizon", result.horizon},
          {"mass_error", result.mass_error}};
}

void run_invariant_measure(const Options& opt, RunReport& report) {
  const LoadedModel loaded = read_model(opt);
  report.model_digest = loaded.digest;
  const MarkovModel& model = loaded.model;

  report.verdicts.push_back(check_markovian(model));
  report.verdicts.push_back(check_auxiliary(model));
  if (!report.verdicts[0].pass || !report.verdicts[1].pass) return;

  StateFunction rho0;
  if (!opt.function_name.empty()) {
    rho0 = pick_function(model, opt.function_name);
  } else {
    rho0 = StateFunction::Zero(model.size());
    for (int x : model.support()) rho0(x) = 1.0;
    rho0 /= model.total_mass();
  }

  DensityResult result;
  if (opt.method == "cesaro") {
    result = cesaro_invariant_density(model, rho0);
  } else if (opt.method == "eigen") {
    result = stationary_density_eigen(model);
  } else {
    throw SchemaError("--method must be cesaro or eigen, got \"" + opt.method + "\"");
  }
  Verdict v = Verdict::passing("invariant-density[" + opt.method + "]", 1e-6);
  v.pass = result.converged;
  v.worst_violation = result.invariance_residual;
  v.details = density_json(result);
  report.verdicts.push_back(v);

  report.verdicts.push_back(invariant_measure_harness(model));
}

void run_simulate(const Options& opt, RunReport& report) {
  const LoadedModel loaded = read_model(opt);
  report.model_digest = loaded.digest;
  const MarkovModel& model = loaded.model;
  if (opt.start_state.empty()) throw SchemaError("--start is required for simulate");
  const int start = resolve_state(model, opt.start_state);
  report.seed = opt.seed;

  const std::vector<double> times{0.25 * opt.horizon, 0.5 * opt.horizon, opt.horizon};
  if (!opt.function_name.empty()) {
    const StateFunction& u = pick_function(model, opt.function_name);
    report.verdicts.push_back(
        supermartingale_test(model, u, opt.beta, start, times, opt.paths, opt.seed)
            .to_verdict(model));
    if (is_harmonic(model, u)) {
      report.verdicts.push_back(
          martingale_test(model, u, start, times, opt.paths, opt.seed).to_verdict(model));
    }
    return;
  }

  // no function: occupation concordance of the sampled paths with P_t
  const double t = opt.horizon;
  const Matrix row_source = transition_matrix(model, t);
  std::vector<long> hits(static_cast<size_t>(model.size()) + 1, 0);
  for (long p = 0; p < opt.paths; ++p) {
    const int state = sample_path(model, start, t, opt.seed, static_cast<uint64_t>(p)).state_at(t);
    ++hits[static_cast<size_t>(state < 0 ? model.size() : state)];
  }
  Verdict v = Verdict::passing("occupation-concordance", 3.0);
  nlohmann::json rows = nlohmann::json::array();
  for (int y = 0; y <= model.size(); ++y) {
    const double expected =
        y < model.size() ? row_source(start, y) : 1.0 - row_source.row(start).sum();
    const double observed = static_cast<double>(hits[static_cast<size_t>(y)]) / opt.paths;
    const double se = std::sqrt(std::max(expected * (1.0 - expected), 1e-12) / opt.paths);
    const double z = (observed - expected) / se;
    v.pass = v.pass && std::abs(z) <= 4.0;
    v.worst_violation = std::max(v.worst_violation, std::abs(z) - 3.0);
    rows.push_back({{"state", y < model.size() ? model.space.label_of(y) : "cemetery"},
                    {"observed", observed},
                    {"expected", expected},
                    {"z", z}});
  }
  v.details = {{"time", t}, {"paths", opt.paths}, {"rows", rows}};
  report.verdicts.push_back(v);
}

void run_dirichlet(const Options& opt, RunReport& report) {
  const LoadedModel loaded = read_model(opt);
  report.model_digest = loaded.digest;
  const MarkovModel& model = loaded.model;
  const StateFunction& u = pick_function(model, opt.function_name);

  std::vector<int> everything(static_cast<size_t>(model.size()));
  for (int i = 0; i < model.size(); ++i) everything[static_cast<size_t>(i)] = i;
  const double energy = dirichlet_form(model, u, u);
  const double bound = dirichlet_bound_constant(model, u, everything);

  Verdict v = Verdict::passing("dirichlet-form", 0.0);
  v.details = {{"energy", energy}, {"bound_constant", bound}};
  report.verdicts.push_back(v);
}

void run_report_all(const Options& opt, RunReport& report) {
  const LoadedModel loaded = read_model(opt);
  report.model_digest = loaded.digest;
  report.seed = opt.seed;
  const MarkovModel& model = loaded.model;

  report.sections["model"] = {{"states", model.space.labels},
                              {"mode", to_string(model.mode)},
                              {"conservative", model.is_conservative()}};

  // variation section: every named function at the default level
  nlohmann::json variation = nlohmann::json::object();
  for (const auto& [name, u] : model.functions) {
    const VariationReport r =
        quasimartingale_verdict(model, u, opt.beta, admissible_sequence_for(model, opt.horizon, 5));
    Verdict v = r.to_verdict(model);
    v.property = "quasimartingale-variation[" + name + "]";
    variation[name] = v.details;
    report.verdicts.push_back(v);
  }
  report.sections["variation"] = variation;

  // invariance section
  const Verdict sub = check_subinvariant(model);
  report.verdicts.push_back(sub);
  nlohmann::json invariance = nlohmann::json::object();
  if (sub.pass) {
    for (const auto& [name, u] : model.functions) {
      const EquivalenceMatrix matrix = equivalence_suite(model, u, tol_or(opt, 1e-8));
      Verdict v = Verdict::passing("equivalence-structure[" + name + "]", matrix.tolerance);
      v.pass = matrix.structure_ok();
      invariance[name] = to_json(matrix);
      report.verdicts.push_back(v);
    }
  }
  report.sections["invariance"] = invariance;

  // invariant-measure section
  nlohmann::json measure_section = nlohmann::json::object();
  if (check_markovian(model).pass && check_auxiliary(model).pass) {
    const Verdict harness = invariant_measure_harness(model);
    report.verdicts.push_back(harness);
    StateFunction rho0 = StateFunction::Zero(model.size());
    for (int x : model.support()) rho0(x) = 1.0;
    rho0 /= model.total_mass();
    measure_section["cesaro"] = density_json(cesaro_invariant_density(model, rho0));
    measure_section["eigen"] = density_json(stationary_density_eigen(model));
  } else {
    measure_section["skipped"] = "model is not Markovian with auxiliary m";
  }
  report.sections["invariant-measure"] = measure_section;

  // a small seeded simulation concordance when sampling applies
  if (model.is_ctmc()) {
    Options sim = opt;
    sim.start_state = model.space.labels.front();
    sim.paths = std::min<long>(opt.paths, 5000);
    sim.horizon = 1.0;
    sim.function_name.clear();
    RunReport sub_report;
    run_simulate(sim, sub_report);
    report.sections["simulate"] = to_json(sub_report.verdicts.back());
    report.verdicts.push_back(sub_report.verdicts.back());
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("MPK_THREADS")) {
    Eigen::setNbThreads(std::max(1, std::atoi(threads)));
  }

  CLI::App app{"finite-state laboratory for Markov semigroup potential theory"};
  app.require_subcommand(1);
  Options opt;

  const auto add_common = [&](CLI::App* cmd, bool wants_function) {
    cmd->add_option("--model", opt.model_path, "model document (JSON)")->required();
    if (wants_function) cmd->add_option("--function", opt.function_name, "named function");
    cmd->add_option("--tolerance", opt.tolerance, "override the default tolerance");
    cmd->add_option("-o", opt.output_path, "write the report here instead of stdout");
  };

  auto* check = app.add_subcommand("check-excessive", "supermedian/excessive membership");
  add_common(check, true);
  check->add_option("--beta", opt.beta, "discount level")->capture_default_str();

  auto* variation = app.add_subcommand("variation", "quasimartingale variation along dyadic levels");
  add_common(variation, true);
  variation->add_option("--beta", opt.beta, "discount level")->capture_default_str();
  variation->add_option("--horizon", opt.horizon, "initial horizon")->capture_default_str();

  auto* decompose = app.add_subcommand("decompose", "difference of two excessive functions");
  add_common(decompose, true);
  decompose->add_option("--beta", opt.beta, "discount level, must be positive")
      ->capture_default_str();

  auto* invariance = app.add_subcommand("invariance-suite", "five-way invariance equivalences");
  add_common(invariance, true);

  auto* measure = app.add_subcommand("invariant-measure", "invariant density search");
  add_common(measure, true);
  measure->add_option("--method", opt.method, "cesaro or eigen")->capture_default_str();
  measure->add_option("--rho0", opt.function_name, "initial density by function name");

  auto* simulate = app.add_subcommand("simulate", "trajectory sampling and empirical checks");
  add_common(simulate, true);
  simulate->add_option("--beta", opt.beta, "discount level")->capture_default_str();
  simulate->add_option("--paths", opt.paths, "number of sampled paths")->capture_default_str();
  simulate->add_option("--seed", opt.seed, "rng seed")->capture_default_str();
  simulate->add_option("--horizon", opt.horizon, "simulation horizon")->capture_default_str();
  simulate->add_option("--start", opt.start_state, "starting state label");

  auto* dirichlet = app.add_subcommand("dirichlet", "energy form and its minimal bound constant");
  add_common(dirichlet, true);

  auto* full = app.add_subcommand("report", "full analysis report");
  add_common(full, false);
  full->add_flag("--all", opt.all, "run every section");
  full->add_option("--beta", opt.beta, "discount level")->capture_default_str();
  full->add_option("--horizon", opt.horizon, "variation horizon")->capture_default_str();
  full->add_option("--paths", opt.paths, "paths for the simulation section")
      ->capture_default_str();
  full->add_option("--seed", opt.seed, "rng seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto started = std::chrono::steady_clock::now();
  RunReport report;
  try {
    if (check->parsed()) {
      report.command = "check-excessive";
      run_check_excessive(opt, report);
    } else if (variation->parsed()) {
      report.command = "variation";
      run_variation(opt, report);
    } else if (decompose->parsed()) {
      report.command = "decompose";
      run_decompose(opt, report);
    } else if (invariance->parsed()) {
      report.command = "invariance-suite";
      run_invariance_suite(opt, report);
    } else if (measure->parsed()) {
      report.command = "invariant-measure";
      run_invariant_measure(opt, report);
    } else if (simulate->parsed()) {
      report.command = "simulate";
      run_simulate(opt, report);
    } else if (dirichlet->parsed()) {
      report.command = "dirichlet";
      run_dirichlet(opt, report);
    } else if (full->parsed()) {
      report.command = "report";
      if (!opt.all) throw SchemaError("report wants --all");
      run_report_all(opt, report);
    }
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NonIntegerTime& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    // analysis-level failures (horizon, convergence, consistency) are verdict
    // content: report and exit 1
    std::cerr << "analysis failed: " << e.what() << "\n";
    Verdict v;
    v.property = "analysis";
    v.pass = false;
    v.details = {{"error", e.what()}};
    report.verdicts.push_back(v);
    emit(report, opt, started);
    return 1;
  }

  emit(report, opt, started);
  return report.all_pass() ? 0 : 1;
}
