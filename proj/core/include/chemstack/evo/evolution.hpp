#pragma once

#include <functional>

#include "chemstack/rng.hpp"
#include "chemstack/sim/trial_record.hpp"
#include "chemstack/stack/blueprint.hpp"

namespace chemstack::evo {

struct EvoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvolutionConfig {
  int population_size = 3;
  int elite_size = 1;
  double crossover_p = 0.1;  // parent switch at each chromosome midpoint
  double mutation_p = 0.9;   // per gene
  int generations = 25;
  std::uint64_t seed = 1;
  // Genomes planted at the front of generation 0 (e.g. a known-good stack
  // for noise-band studies); the rest of the population is drawn uniformly.
  std::vector<stack::Genome> seed_genomes;

  void validate() const;
};

struct FitnessSpec {
  enum class Kind { RateTarget, ConstancyDelay };
  Kind kind = Kind::RateTarget;

  // rate-target variant
  double target = 0.0;  // device send rate to hold, B/s
  double sigma = 0.0;   // Gaussian width; <= 0 selects 0.05 * target
  double w2 = 1.0;      // delivery-ratio exponent
  double w3 = 1.0;      // overhead-term exponent
  // Best attainable goodput share, used to normalize the overhead term so a
  // minimal stack scores 1 there. <= 0 disables the normalization.
  double overhead_ref = 0.0;

  // constancy-delay variant
  double w_var = 1.0;
  double w_delay = 1.0;
  double d_ref = 0.1;  // delay scale, s

  double width() const { return sigma > 0.0 ? sigma : 0.05 * target; }
};

// f = exp(-(r - t)^2 / 2s^2) * delivery^w2 * overhead^w3. Invalid records
// score 0; a valid record with an empty measurement window is an error.
double fitness_rate_target(const sim::TrialRecord& rec, const FitnessSpec& fs);

// f = exp(-w_var * CoV(phy series)) * exp(-w_delay * mean_delay / d_ref).
// A window that moved no traffic scores 0.
double fitness_constancy_delay(const sim::TrialRecord& rec,
                               const FitnessSpec& fs);

// Dispatch on fs.kind.
double fitness_of(const sim::TrialRecord& rec, const FitnessSpec& fs);

// Roulette draw proportional to fitness; uniform when everything scored 0.
std::size_t select_index(const std::vector<double>& fitness, Rng& rng);

// Child from two parents: genes copied under a cursor that switches parent
// with probability crossover_p at each chromosome midpoint, then each gene
// mutates with probability mutation_p to round(Normal(prev, |A|/2)) clipped
// into its domain, |A| being the domain width.
stack::Genome recombine(const stack::Genome& a, const stack::Genome& b,
                        const stack::GenomeLayout& layout,
                        const EvolutionConfig& cfg, Rng& rng);

// Elites (ties to the lower index) plus recombined children.
std::vector<stack::Genome> next_generation(
    const std::vector<stack::Genome>& pop, const std::vector<double>& fitness,
    const stack::GenomeLayout& layout, const EvolutionConfig& cfg, Rng& rng);

struct GenerationLog {
  std::vector<stack::Genome> genomes;
  std::vector<sim::TrialRecord> records;  // .fitness filled in
  std::size_t best = 0;                   // index of the generation's best
  double best_fitness = 0.0;
};

struct History {
  std::vector<GenerationLog> generations;
};

// Runs one genome's trial; receives a derived seed plus (generation, index)
// for logging. Must return record.valid = false (not throw) for blueprints
// that fail to compose - they score fitness 0 without costing trial time.
using TrialRunner = std::function<sim::TrialRecord(
    const stack::Genome&, std::uint64_t seed, int generation, int index)>;

// The generation loop. Population 0 is seed_genomes (front) plus uniform
// draws; each generation every genome is trialled with seed
// mix(mix(base, generation), index) and the next population is produced by
// next_generation. Elites are re-trialled every generation, so their logged
// fitness tracks current conditions, noise included.
History evolve(const stack::GenomeLayout& layout, const EvolutionConfig& cfg,
               const FitnessSpec& fs, const TrialRunner& run_trial);

}  // namespace chemstack::evo
