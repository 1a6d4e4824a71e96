#include "chemstack/sim/run.hpp"

#include <cstdio>
#include <fstream>

namespace chemstack::sim {

namespace {

// All CSV numbers go through fixed-precision printf formatting so a given
// (scenario, seed) pair produces byte-identical files on every run.
std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw ScenarioError("cannot write '" + p.string() + "'");
  return out;
}

void write_artifacts(const evo::History& hist,
                     const stack::GenomeLayout& layout,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  auto fitness = open_out(dir / "fitness.csv");
  fitness << "generation,genome,fitness,blueprint\n";
  auto best = open_out(dir / "best.csv");
  best << "generation,best_fitness\n";
  auto rates = open_out(dir / "rates.csv");
  rates << "generation,genome,bin,phy_rate,app_rate\n";
  auto blue = open_out(dir / "blueprints.log");

  for (std::size_t g = 0; g < hist.generations.size(); ++g) {
    const auto& gen = hist.generations[g];
    for (std::size_t i = 0; i < gen.records.size(); ++i) {
      const auto& rec = gen.records[i];
      fitness << g << ',' << i << ',' << fmt(rec.fitness) << ','
              << rec.blueprint << '\n';
      for (std::size_t b = 0; b < rec.phy_rate.size(); ++b)
        rates << g << ',' << i << ',' << b << ',' << fmt(rec.phy_rate[b], 3)
              << ',' << fmt(rec.app_rate[b], 3) << '\n';
      blue << "# gen " << g << " genome " << i << " fitness "
           << fmt(rec.fitness) << " path "
           << (rec.valid ? rec.path : "invalid: " + rec.error) << '\n'
           << layout.to_text(gen.genomes[i]) << '\n';
    }
    best << g << ',' << fmt(gen.best_fitness) << '\n';
  }
}

}  // namespace

TrialContext::TrialContext(const Scenario& sc)
    : registry_(proto::build_registry(sc.world.params)),
      layout_(proto::build_layout(registry_, sc.world.params)),
      world_(sc.world) {}

TrialRecord TrialContext::run(const stack::Genome& g, std::uint64_t seed,
                              WorldAudit* audit) const {
  return run_trial(layout_, g, world_, seed, audit);
}

evo::History run_scenario(const Scenario& sc, std::uint64_t seed,
                          const std::filesystem::path& outdir) {
  TrialContext ctx(sc);
  evo::EvolutionConfig cfg = sc.evo;
  cfg.seed = seed;
  if (sc.seed_optimum)
    cfg.seed_genomes = {ctx.layout().parse(sc.optimum)};

  const auto runner = [&ctx](const stack::Genome& g, std::uint64_t s, int,
                             int) { return ctx.run(g, s); };
  evo::History hist = evo::evolve(ctx.layout(), cfg, sc.fitness, runner);
  write_artifacts(hist, ctx.layout(), outdir);
  return hist;
}

std::vector<evo::History> run_many(const Scenario& sc, std::uint64_t base_seed,
                                   int runs,
                                   const std::filesystem::path& outdir) {
  if (runs < 1) throw ScenarioError("runs must be >= 1");
  std::vector<evo::History> all;
  all.reserve(runs);
  for (int r = 0; r < runs; ++r) {
    char sub[32];
    std::snprintf(sub, sizeof(sub), "run_%03d", r);
    all.push_back(run_scenario(sc, Rng::mix(base_seed, r), outdir / sub));
  }

  std::filesystem::create_directories(outdir);
  auto mean = open_out(outdir / "mean_best.csv");
  mean << "generation,mean_best_fitness\n";
  const std::size_t gens = all.front().generations.size();
  for (std::size_t g = 0; g < gens; ++g) {
    double sum = 0.0;
    for (const auto& h : all) sum += h.generations[g].best_fitness;
    mean << g << ',' << fmt(sum / static_cast<double>(all.size())) << '\n';
  }
  return all;
}

TrialRecord replay_blueprint(const Scenario& sc, const stack::Genome& genome,
                             std::uint64_t seed,
                             const std::filesystem::path& outdir) {
  TrialContext ctx(sc);
  TrialRecord rec = ctx.run(genome, seed);
  rec.fitness = evo::fitness_of(rec, sc.fitness);

  if (!outdir.empty()) {
    std::filesystem::create_directories(outdir);
    auto rates = open_out(outdir / "rates.csv");
    rates << "generation,genome,bin,phy_rate,app_rate\n";
    for (std::size_t b = 0; b < rec.phy_rate.size(); ++b)
      rates << 0 << ',' << 0 << ',' << b << ',' << fmt(rec.phy_rate[b], 3)
            << ',' << fmt(rec.app_rate[b], 3) << '\n';
  }
  return rec;
}

}  // namespace chemstack::sim
