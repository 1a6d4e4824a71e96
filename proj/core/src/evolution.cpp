#include "chemstack/evo/evolution.hpp"

#include <algorithm>
#include <cmath>

namespace chemstack::evo {

void EvolutionConfig::validate() const {
  if (population_size < 1) throw EvoError("population_size must be >= 1");
  if (elite_size < 0 || elite_size >= population_size)
    throw EvoError("elite_size must lie in [0, population_size)");
  if (crossover_p < 0.0 || crossover_p > 1.0)
    throw EvoError("crossover_p outside [0, 1]");
  if (mutation_p < 0.0 || mutation_p > 1.0)
    throw EvoError("mutation_p outside [0, 1]");
  if (generations < 1) throw EvoError("generations must be >= 1");
  if (static_cast<int>(seed_genomes.size()) > population_size)
    throw EvoError("more seed genomes than population slots");
}

double fitness_rate_target(const sim::TrialRecord& rec,
                           const FitnessSpec& fs) {
  if (!rec.valid) return 0.0;
  if (rec.duration <= 0.0 || rec.phy_rate.empty())
    throw EvoError("empty measurement window");
  const double s = fs.width();
  if (s <= 0.0) throw EvoError("rate-target fitness needs a positive width");

  const double dev = rec.mean_phy_rate() - fs.target;
  const double r1 = std::exp(-dev * dev / (2.0 * s * s));
  const double r2 = std::pow(rec.delivery_ratio(), fs.w2);
  double share = rec.goodput_share();
  if (fs.overhead_ref > 0.0) share = std::min(1.0, share / fs.overhead_ref);
  const double r3 = std::pow(share, fs.w3);
  return std::clamp(r1 * r2 * r3, 0.0, 1.0);
}

double fitness_constancy_delay(const sim::TrialRecord& rec,
                               const FitnessSpec& fs) {
  if (!rec.valid) return 0.0;
  if (rec.duration <= 0.0 || rec.phy_rate.empty())
    throw EvoError("empty measurement window");
  if (rec.mean_phy_rate() <= 0.0) return 0.0;  // nothing flowed
  const double f = std::exp(-fs.w_var * sim::series_cov(rec.phy_rate)) *
                   std::exp(-fs.w_delay * rec.mean_delay() / fs.d_ref);
  return std::clamp(f, 0.0, 1.0);
}

double fitness_of(const sim::TrialRecord& rec, const FitnessSpec& fs) {
  return fs.kind == FitnessSpec::Kind::RateTarget
             ? fitness_rate_target(rec, fs)
             : fitness_constancy_delay(rec, fs);
}

std::size_t select_index(const std::vector<double>& fitness, Rng& rng) {
  if (fitness.empty()) throw EvoError("selection over an empty population");
  double total = 0.0;
  for (double f : fitness) total += f;
  if (total <= 0.0) return rng.below(fitness.size());
  return rng.pick_weighted(fitness, total);
}

stack::Genome recombine(const stack::Genome& a, const stack::Genome& b,
                        const stack::GenomeLayout& layout,
                        const EvolutionConfig& cfg, Rng& rng) {
  if (!layout.length_ok(a) || !layout.length_ok(b))
    throw EvoError("parent genome length does not match the layout");

  stack::Genome child;
  child.genes.reserve(layout.total_genes());
  const stack::Genome* cur = &a;
  for (const auto& ch : layout.chromosomes()) {
    const std::size_t mid = ch.genes.size() / 2;
    for (std::size_t g = 0; g < ch.genes.size(); ++g) {
      if (g == mid && rng.uniform01() < cfg.crossover_p)
        cur = (cur == &a) ? &b : &a;
      child.genes.push_back(cur->genes[ch.offset + g]);
    }
  }

  // Gaussian mutation, sigma = half the domain width, round then clip.
  std::size_t i = 0;
  for (const auto& ch : layout.chromosomes()) {
    for (const auto& info : ch.genes) {
      if (rng.uniform01() < cfg.mutation_p) {
        const double sigma = (info.hi - info.lo) / 2.0;
        const double draw = rng.normal(child.genes[i], sigma);
        long v = std::lround(draw);
        v = std::clamp(v, static_cast<long>(info.lo),
                       static_cast<long>(info.hi));
        child.genes[i] = static_cast<int>(v);
      }
      ++i;
    }
  }
  return child;
}

std::vector<stack::Genome> next_generation(
    const std::vector<stack::Genome>& pop, const std::vector<double>& fitness,
    const stack::GenomeLayout& layout, const EvolutionConfig& cfg, Rng& rng) {
  if (pop.size() != fitness.size() ||
      pop.size() != static_cast<std::size_t>(cfg.population_size))
    throw EvoError("population/fitness size mismatch");

  // Rank by fitness, ties to the lower index.
  std::vector<std::size_t> order(pop.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) {
                     return fitness[x] > fitness[y];
                   });

  std::vector<stack::Genome> next;
  next.reserve(pop.size());
  for (int e = 0; e < cfg.elite_size; ++e)
    next.push_back(pop[order[static_cast<std::size_t>(e)]]);
  while (next.size() < pop.size()) {
    const stack::Genome& pa = pop[select_index(fitness, rng)];
    const stack::Genome& pb = pop[select_index(fitness, rng)];
    next.push_back(recombine(pa, pb, layout, cfg, rng));
  }
  return next;
}

History evolve(const stack::GenomeLayout& layout, const EvolutionConfig& cfg,
               const FitnessSpec& fs, const TrialRunner& run_trial) {
  cfg.validate();
  Rng ops(Rng::mix(cfg.seed, 0x67656e6full));  // GA operator stream

  std::vector<stack::Genome> pop;
  for (const auto& g : cfg.seed_genomes) {
    if (!layout.length_ok(g))
      throw EvoError("seed genome length does not match the layout");
    pop.push_back(g);
  }
  while (pop.size() < static_cast<std::size_t>(cfg.population_size))
    pop.push_back(layout.random(ops));

  History hist;
  for (int gen = 0; gen < cfg.generations; ++gen) {
    GenerationLog log;
    log.genomes = pop;
    std::vector<double> fitness(pop.size(), 0.0);
    for (std::size_t i = 0; i < pop.size(); ++i) {
      const std::uint64_t seed = Rng::mix(
          Rng::mix(cfg.seed, static_cast<std::uint64_t>(gen)), i);
      sim::TrialRecord rec =
          run_trial(pop[i], seed, gen, static_cast<int>(i));
      rec.fitness = fitness_of(rec, fs);
      fitness[i] = rec.fitness;
      log.records.push_back(std::move(rec));
    }
    log.best = 0;
    for (std::size_t i = 1; i < fitness.size(); ++i)
      if (fitness[i] > fitness[log.best]) log.best = i;
    log.best_fitness = fitness[log.best];
    hist.generations.push_back(std::move(log));

    if (gen + 1 < cfg.generations)
      pop = next_generation(pop, fitness, layout, cfg, ops);
  }
  return hist;
}

}  // namespace chemstack::evo
