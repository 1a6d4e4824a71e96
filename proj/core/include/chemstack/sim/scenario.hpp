#pragma once

#include <iosfwd>

#include "chemstack/evo/evolution.hpp"
#include "chemstack/sim/world.hpp"

namespace chemstack::sim {

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A complete experiment description: world, fitness, and evolution settings.
// The on-disk form is line-oriented `key = value` with '#' comments and a
// mandatory `schema = 1`; unknown keys are hard errors, so a scenario that
// parses is a scenario whose every line took effect. The RNG seed is not
// part of the file - runs are (scenario, seed) pairs.
struct Scenario {
  std::string name;  // file stem, used in logs
  WorldConfig world;
  evo::EvolutionConfig evo;
  evo::FitnessSpec fitness;

  // When set, generation 0 starts with `optimum` planted in slot 0 (the
  // noise-band experiments watch a known-good elite rather than search).
  bool seed_optimum = false;
  // One-line blueprint of the hand-configured reference stack; also the
  // normalization point for convergence studies.
  std::string optimum;

  // Fill derived defaults (fitness width, overhead normalization) and check
  // cross-field invariants. Called by the parsers.
  void finalize();

  static Scenario parse(std::istream& in, const std::string& name);
  static Scenario parse_file(const std::string& path);
};

}  // namespace chemstack::sim
