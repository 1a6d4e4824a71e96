// Command-line front end: `run` executes a scenario's evolution loop,
// `analyze` turns a reaction file into its ODE system / steady state /
// saturation curve, `replay` measures one fixed blueprint. Everything is
// seed-controlled; (scenario, seed) determines every output byte.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "chemstack/chem/grammar.hpp"
#include "chemstack/flow/analysis.hpp"
#include "chemstack/sim/run.hpp"

namespace fs = std::filesystem;
using namespace chemstack;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::uint64_t env_seed(std::uint64_t fallback) {
  if (const char* s = std::getenv("CHEMSTACK_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw sim::ScenarioError("CHEMSTACK_SEED is not an integer");
    }
  }
  return fallback;
}

std::string env_out(const std::string& fallback) {
  if (const char* s = std::getenv("CHEMSTACK_OUT")) return s;
  return fallback;
}

void print_record(const sim::TrialRecord& rec) {
  if (!rec.valid) {
    std::cout << "invalid blueprint: " << rec.error << "\n";
    return;
  }
  std::cout << "path            " << rec.path << "\n"
            << "settle          " << rec.settle << " s\n"
            << "measured        " << rec.duration << " s\n"
            << "mean phy rate   " << rec.mean_phy_rate() << " B/s\n"
            << "delivery ratio  " << rec.delivery_ratio() << "\n"
            << "goodput share   " << rec.goodput_share() << "\n"
            << "mean delay      " << rec.mean_delay() << " s\n"
            << "fitness         " << rec.fitness << "\n";
}

int cmd_run(const std::string& scn_path, std::uint64_t seed,
            const std::string& out, int generations, int runs) {
  sim::Scenario sc = sim::Scenario::parse_file(scn_path);
  if (generations > 0) {
    sc.evo.generations = generations;
    sc.finalize();
  }
  if (runs <= 1) {
    const evo::History hist = sim::run_scenario(sc, seed, out);
    const auto& last = hist.generations.back();
    std::cout << "scenario " << sc.name << " seed " << seed << ": "
              << hist.generations.size() << " generations\n"
              << "final best fitness " << last.best_fitness << " path "
              << last.records[last.best].path << "\n"
              << "artifacts in " << out << "\n";
  } else {
    const auto all = sim::run_many(sc, seed, runs, out);
    double mean = 0.0;
    for (const auto& h : all) mean += h.generations.back().best_fitness;
    mean /= static_cast<double>(all.size());
    std::cout << "scenario " << sc.name << " x" << runs
              << " runs: mean final best fitness " << mean << "\n"
              << "artifacts in " << out << "\n";
  }
  return 0;
}

int cmd_analyze(const std::string& rxn_path, double vsrc, bool have_vsrc,
                const std::string& out) {
  const chem::ParsedNetwork parsed = chem::parse_network_file(rxn_path);
  flow::ParsedModel pm = flow::derive_odes(parsed);
  const flow::FlowModel& model = pm.model;

  std::ostringstream text;
  text << "# species:";
  for (const auto& n : model.species_names()) text << ' ' << n;
  text << "\n# ODE system\n";
  for (std::size_t i = 0; i < model.n_species(); ++i)
    text << model.ode_string(i) << '\n';

  text << "# stoichiometric matrix (rows = species, columns =";
  for (std::size_t c = 0; c < model.terms().size(); ++c)
    text << ' ' << model.terms()[c].label;
  text << ")\n";
  for (std::size_t r = 0; r < model.n_species(); ++r) {
    for (std::size_t c = 0; c < model.terms().size(); ++c)
      text << (c ? " " : "") << model.psi()(r, c);
    text << '\n';
  }

  for (const auto& v : model.conserved_sums()) {
    text << "# conserved:";
    bool first = true;
    for (std::size_t i = 0; i < model.n_species(); ++i)
      if (v(i) != 0.0) {
        text << (first ? " " : " + ");
        if (v(i) != 1.0) text << v(i) << '*';
        text << "c_" << model.species_names()[i];
        first = false;
      }
    text << '\n';
  }

  // Inflow values: file-bound constants, overridable by --vsrc when there is
  // exactly one stream.
  Eigen::VectorXd inflows(model.n_inflows());
  for (std::size_t i = 0; i < model.n_inflows(); ++i) {
    const auto& sym = pm.inflow_symbols[i];
    const auto it = parsed.constants.find(sym);
    inflows(i) = it != parsed.constants.end() ? it->second : 0.0;
  }
  if (have_vsrc) {
    if (model.n_inflows() != 1)
      throw sim::ScenarioError(
          "--vsrc needs a reaction file with exactly one inflow");
    inflows(0) = vsrc;
  }

  if (model.n_inflows() > 0) {
    text << "# steady state at";
    for (std::size_t i = 0; i < model.n_inflows(); ++i)
      text << ' ' << pm.inflow_symbols[i] << '=' << inflows(i);
    text << '\n';
  } else {
    text << "# steady state\n";
  }
  const flow::SteadyState ss = flow::steady_state(model, inflows);
  if (ss.status == flow::SteadyState::Status::Ok) {
    for (std::size_t i = 0; i < model.n_species(); ++i)
      text << "c_" << model.species_names()[i] << " = " << ss.c(i) << '\n';
  } else {
    text << "unbounded:";
    for (const auto& n : ss.unbounded_species) text << ' ' << n;
    text << '\n';
  }

  std::cout << text.str();

  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream odes(fs::path(out) / "odes.txt");
    odes << text.str();

    // Saturation curve when the file carries the token loop's parameters.
    const auto k1 = parsed.constants.find("k1");
    const auto k2 = parsed.constants.find("k2");
    const auto e0 = parsed.initial_counts.find("E");
    if (k1 != parsed.constants.end() && k2 != parsed.constants.end() &&
        e0 != parsed.initial_counts.end()) {
      std::ofstream mm(fs::path(out) / "mm_curve.csv");
      mm << "c_S,v_out\n";
      for (double c = 0.25; c <= 512.0; c *= 2.0)
        mm << c << ','
           << flow::michaelis_menten_rate(c,
                                          static_cast<double>(e0->second),
                                          k1->second, k2->second)
           << '\n';
    }
    std::cout << "artifacts in " << out << "\n";
  }
  return 0;
}

int cmd_replay(const std::string& scn_path, std::string blueprint,
               const std::string& blueprint_file, std::uint64_t seed,
               const std::string& out) {
  if (!blueprint_file.empty()) {
    std::ifstream in(blueprint_file);
    if (!in)
      throw sim::ScenarioError("cannot open blueprint file '" +
                               blueprint_file + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    blueprint = ss.str();
  }
  if (blueprint.empty())
    throw sim::ScenarioError("replay needs --blueprint or --blueprint-file");

  const sim::Scenario sc = sim::Scenario::parse_file(scn_path);
  sim::TrialContext ctx(sc);
  const stack::Genome genome = ctx.layout().parse(blueprint);
  const sim::TrialRecord rec = sim::replay_blueprint(sc, genome, seed, out);
  print_record(rec);
  if (!out.empty()) std::cout << "artifacts in " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chemical rate controller + evolving protocol stacks"};
  app.require_subcommand(1);

  std::string scn, out, rxn, blueprint, blueprint_file;
  std::uint64_t seed = 1;
  int generations = -1, runs = 1;
  double vsrc = 0.0;

  CLI::App* run = app.add_subcommand("run", "evolve stacks under a scenario");
  run->add_option("--scenario", scn, "scenario file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "base RNG seed");
  run->add_option("--out", out, "output directory");
  run->add_option("--generations", generations,
                  "override the scenario's generation count");
  run->add_option("--runs", runs,
                  "repeat with derived seeds and write mean_best.csv");

  CLI::App* analyze = app.add_subcommand(
      "analyze", "reaction file -> ODEs, steady state, saturation curve");
  analyze->alias("derive-odes");
  analyze->add_option("file", rxn, "reaction grammar file")
      ->required()
      ->check(CLI::ExistingFile);
  CLI::Option* vsrc_opt =
      analyze->add_option("--vsrc", vsrc, "inflow rate for the steady state");
  analyze->add_option("--out", out, "also write odes.txt / mm_curve.csv here");

  CLI::App* replay =
      app.add_subcommand("replay", "measure one fixed blueprint");
  replay->add_option("--scenario", scn, "scenario file")
      ->required()
      ->check(CLI::ExistingFile);
  replay->add_option("--blueprint", blueprint,
                     "blueprint text, chromosomes '|'-separated");
  replay->add_option("--blueprint-file", blueprint_file,
                     "file with one chromosome per line")
      ->check(CLI::ExistingFile);
  replay->add_option("--seed", seed, "RNG seed");
  replay->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    seed = run->count("--seed") || replay->count("--seed") ? seed
                                                           : env_seed(seed);
    out = !out.empty() ? out : env_out(app.got_subcommand(analyze) ? "" : "out");

    if (app.got_subcommand(run))
      return cmd_run(scn, seed, out, generations, runs);
    if (app.got_subcommand(analyze))
      return cmd_analyze(rxn, vsrc, vsrc_opt->count() > 0, out);
    return cmd_replay(scn, blueprint, blueprint_file, seed, out);
  } catch (const sim::ScenarioError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const chem::GrammarError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const stack::StackError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const evo::EvoError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
