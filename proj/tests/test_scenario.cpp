#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "chemstack/sim/run.hpp"

using namespace chemstack;
using namespace chemstack::sim;
namespace fs = std::filesystem;

namespace {

Scenario parse_text(const std::string& text, const std::string& name = "t") {
  std::istringstream in(text);
  return Scenario::parse(in, name);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// A deliberately tiny experiment: short warm-up, 1.5 s window, two
// generations. Used wherever a real evolution run has to finish in seconds.
const char* kMicro = R"(
schema = 1
link.bandwidth = 1000000
source.mean = 50000
source.payload = 1000
crc.e0 = 100
crc.k2 = 1
trial.measure = 1.5
trial.min_settle = 0.5
trial.settle_margin = 0
fitness.kind = rate_target
fitness.target = 52000
fitness.sigma = 20000
evo.generations = 2
evo.optimum = tcp 0 0 0 0 0 | udp 0 0 | crc 1 50 0 | ipv4 1 0
)";

fs::path fresh_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / leaf;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("a minimal file gets the documented defaults") {
  Scenario sc = parse_text("schema = 1\nfitness.target = 50000\n", "tiny");
  CHECK(sc.name == "tiny");
  CHECK(sc.world.link.bandwidth == doctest::Approx(1e6));
  CHECK(sc.world.link.delay == doctest::Approx(0.01));
  CHECK(sc.world.source.flows == 1);
  CHECK(sc.world.source.payload == 1000);
  CHECK(sc.world.measure == doctest::Approx(20.0));
  CHECK(sc.world.params.crc.evolve_e0);
  CHECK_FALSE(sc.world.params.crc.evolve_k_F);
  CHECK_FALSE(sc.world.deterministic);
  CHECK(sc.evo.population_size == 3);
  CHECK(sc.evo.elite_size == 1);
  CHECK(sc.evo.crossover_p == doctest::Approx(0.1));
  CHECK(sc.evo.mutation_p == doctest::Approx(0.9));
  CHECK(sc.evo.generations == 25);
  CHECK_FALSE(sc.seed_optimum);

  // Derived: width 5 % of the target, overhead reference = leanest framing.
  CHECK(sc.fitness.sigma == doctest::Approx(2500.0));
  CHECK(sc.fitness.overhead_ref == doctest::Approx(1000.0 / 1038.0));
}

TEST_CASE("comments, spacing and spelled-out booleans are accepted") {
  Scenario sc = parse_text(
      "# experiment header\n"
      "schema = 1   # required\n"
      "\n"
      "  crc.evolve_k_F   =  yes\n"
      "crc.evolve_e0 = off\n"
      "crc.e0 = 250\n"
      "trial.mode = deterministic\n"
      "fitness.kind = constancy_delay\n");
  CHECK(sc.world.params.crc.evolve_k_F);
  CHECK_FALSE(sc.world.params.crc.evolve_e0);
  CHECK(sc.world.params.crc.e0 == doctest::Approx(250.0));
  CHECK(sc.world.deterministic);
  CHECK(sc.world.params.crc_mode == chem::StepMode::Deterministic);
  CHECK(sc.fitness.kind == evo::FitnessSpec::Kind::ConstancyDelay);
}

TEST_CASE("parse errors name the offending line") {
  CHECK_THROWS_WITH_AS(parse_text("schema = 1\n\nlink.bandwith = 2\n"),
                       doctest::Contains("line 3"), ScenarioError);
  CHECK_THROWS_WITH_AS(parse_text("schema = 1\nlink.bandwith = 2\n"),
                       doctest::Contains("unknown key 'link.bandwith'"),
                       ScenarioError);
  CHECK_THROWS_WITH_AS(parse_text("schema = 1\njust words\n"),
                       doctest::Contains("expected 'key = value'"),
                       ScenarioError);
  CHECK_THROWS_WITH_AS(parse_text("schema = 1\nlink.delay = fast\n"),
                       doctest::Contains("expected a number"), ScenarioError);
  CHECK_THROWS_WITH_AS(parse_text("schema = 1\nsource.payload = 12q\n"),
                       doctest::Contains("trailing characters"),
                       ScenarioError);
  CHECK_THROWS_WITH_AS(parse_text("schema = 1\ncrc.evolve_e0 = maybe\n"),
                       doctest::Contains("expected a boolean"), ScenarioError);
  CHECK_THROWS_WITH_AS(parse_text("schema = 2\n"),
                       doctest::Contains("unsupported schema"), ScenarioError);
  CHECK_THROWS_WITH_AS(parse_text("schema = 1\ntrial.mode = sideways\n"),
                       doctest::Contains("stochastic or deterministic"),
                       ScenarioError);
  CHECK_THROWS_WITH_AS(parse_text("schema = 1\nfitness.kind = loudest\n"),
                       doctest::Contains("rate_target or constancy_delay"),
                       ScenarioError);
  CHECK_THROWS_WITH_AS(parse_text("link.loss = 0\n"),
                       doctest::Contains("missing 'schema = 1'"),
                       ScenarioError);
  CHECK_THROWS_AS(Scenario::parse_file("/nonexistent/file.scn"),
                  ScenarioError);
}

TEST_CASE("cross-field invariants are enforced after parsing") {
  CHECK_THROWS_WITH_AS(
      parse_text("schema = 1\nlink.bandwidth = 1000\nfitness.target = 2000\n"),
      doctest::Contains("below link.bandwidth"), ScenarioError);
  CHECK_THROWS_WITH_AS(parse_text("schema = 1\nevo.seed_optimum = 1\n"),
                       doctest::Contains("needs evo.optimum"), ScenarioError);
  CHECK_THROWS_AS(parse_text("schema = 1\nsource.flows = 3\n"),
                  ScenarioError);
  CHECK_THROWS_AS(parse_text("schema = 1\nlink.loss = 1.5\n"),
                  ScenarioError);
  CHECK_THROWS_AS(parse_text("schema = 1\ntrial.measure = 0\n"),
                  ScenarioError);
  CHECK_THROWS_AS(parse_text("schema = 1\nevo.population = 0\n"),
                  ScenarioError);
  CHECK_THROWS_AS(parse_text("schema = 1\ncrc.e0 = 0\n"), ScenarioError);
}

TEST_CASE("the shipped experiment files parse and their optima decode") {
  const fs::path dir = CHEMSTACK_SCENARIO_DIR;

  Scenario e1 = Scenario::parse_file((dir / "e1_single_flow.scn").string());
  CHECK(e1.name == "e1_single_flow");
  CHECK(e1.fitness.kind == evo::FitnessSpec::Kind::RateTarget);
  CHECK(e1.fitness.target == doctest::Approx(500000.0));
  CHECK(e1.evo.generations == 25);

  Scenario e2 = Scenario::parse_file((dir / "e2_two_flows.scn").string());
  CHECK(e2.world.source.flows == 2);

  Scenario e3 = Scenario::parse_file((dir / "e3_output_smoothing.scn").string());
  CHECK(e3.fitness.kind == evo::FitnessSpec::Kind::ConstancyDelay);
  CHECK(e3.world.params.crc.evolve_k_F);
  CHECK_FALSE(e3.world.params.crc.evolve_e0);

  Scenario ec = Scenario::parse_file((dir / "e1_cross_traffic.scn").string());
  CHECK(ec.seed_optimum);
  CHECK(ec.world.cross.mean > 0.0);

  for (const Scenario* sc : {&e1, &e2, &e3, &ec}) {
    REQUIRE_FALSE(sc->optimum.empty());
    TrialContext ctx(*sc);
    CHECK(ctx.layout().length_ok(ctx.layout().parse(sc->optimum)));
  }
}

TEST_CASE("a short evolution writes the artifact set, reproducibly") {
  Scenario sc = parse_text(kMicro, "micro");
  const fs::path dir_a = fresh_dir("chemstack_scn_a");
  const fs::path dir_b = fresh_dir("chemstack_scn_b");

  evo::History hist = run_scenario(sc, 5, dir_a);
  REQUIRE(hist.generations.size() == 2);
  for (const auto& gen : hist.generations) {
    CHECK(gen.genomes.size() == 3);
    CHECK(gen.records.size() == 3);
  }

  for (const char* leaf :
       {"fitness.csv", "best.csv", "rates.csv", "blueprints.log"})
    CHECK(fs::exists(dir_a / leaf));

  // 1 header + one row per trial.
  std::istringstream fitness(slurp(dir_a / "fitness.csv"));
  std::string line;
  int rows = 0;
  std::getline(fitness, line);
  CHECK(line == "generation,genome,fitness,blueprint");
  while (std::getline(fitness, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 6);

  // Same (scenario, seed) pair, byte-identical artifacts.
  run_scenario(sc, 5, dir_b);
  for (const char* leaf :
       {"fitness.csv", "best.csv", "rates.csv", "blueprints.log"})
    CHECK(slurp(dir_a / leaf) == slurp(dir_b / leaf));

  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("run_many fans out seeds and aggregates the best curve") {
  Scenario sc = parse_text(kMicro, "micro");
  const fs::path dir = fresh_dir("chemstack_scn_many");

  auto all = run_many(sc, 9, 2, dir);
  REQUIRE(all.size() == 2);
  CHECK(fs::exists(dir / "run_000" / "fitness.csv"));
  CHECK(fs::exists(dir / "run_001" / "fitness.csv"));

  std::istringstream mean(slurp(dir / "mean_best.csv"));
  std::string line;
  std::getline(mean, line);
  CHECK(line == "generation,mean_best_fitness");
  int rows = 0;
  while (std::getline(mean, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);

  // Distinct run seeds: the two runs explored different genomes.
  CHECK(slurp(dir / "run_000" / "fitness.csv") !=
        slurp(dir / "run_001" / "fitness.csv"));

  fs::remove_all(dir);
}

TEST_CASE("replay scores a fixed blueprint under the scenario fitness") {
  Scenario sc = parse_text(kMicro, "micro");
  TrialContext ctx(sc);
  stack::Genome opt = ctx.layout().parse(sc.optimum);

  const fs::path dir = fresh_dir("chemstack_scn_replay");
  TrialRecord rec = replay_blueprint(sc, opt, 77, dir);
  REQUIRE(rec.valid);
  CHECK(rec.path == "pubsub/crc/ipv4/ethernet");
  CHECK(rec.fitness == doctest::Approx(evo::fitness_of(rec, sc.fitness)));
  CHECK(rec.fitness > 0.0);
  CHECK(fs::exists(dir / "rates.csv"));
  fs::remove_all(dir);
}
