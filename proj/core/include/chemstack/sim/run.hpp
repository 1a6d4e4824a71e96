#pragma once

#include <filesystem>

#include "chemstack/sim/scenario.hpp"

namespace chemstack::sim {

// The per-scenario trial machinery: the module catalog, the genome layout it
// induces, and the world settings. The layout points into the registry, so
// the context is pinned in place once built.
class TrialContext {
 public:
  explicit TrialContext(const Scenario& sc);
  TrialContext(const TrialContext&) = delete;
  TrialContext& operator=(const TrialContext&) = delete;

  const stack::GenomeLayout& layout() const { return layout_; }
  const WorldConfig& world() const { return world_; }

  TrialRecord run(const stack::Genome& g, std::uint64_t seed,
                  WorldAudit* audit = nullptr) const;

 private:
  stack::ModuleRegistry registry_;
  stack::GenomeLayout layout_;
  WorldConfig world_;
};

// Execute the scenario's evolution under `seed` and write the run artifacts
// into `outdir`:
//   fitness.csv     generation, genome, fitness, blueprint
//   best.csv        generation, best_fitness
//   rates.csv       generation, genome, bin, phy_rate, app_rate (1 s bins)
//   blueprints.log  per-trial chromosome listing with fitness and path
evo::History run_scenario(const Scenario& sc, std::uint64_t seed,
                          const std::filesystem::path& outdir);

// Repeat run_scenario `runs` times with seeds mix(base_seed, run) in
// run_NNN/ subdirectories and write the cross-run `mean_best.csv`
// (generation, mean_best_fitness).
std::vector<evo::History> run_many(const Scenario& sc, std::uint64_t base_seed,
                                   int runs,
                                   const std::filesystem::path& outdir);

// One measured trial of a fixed blueprint under the scenario's world, with
// the fitness filled in; writes a single-trial rates.csv when outdir is
// non-empty.
TrialRecord replay_blueprint(const Scenario& sc, const stack::Genome& genome,
                             std::uint64_t seed,
                             const std::filesystem::path& outdir = {});

}  // namespace chemstack::sim
