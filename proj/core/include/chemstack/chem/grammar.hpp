#pragma once

#include <map>
#include <string>

#include "chemstack/chem/network.hpp"

namespace chemstack::chem {

struct GrammarError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parsed reaction-grammar file. Grammar (one directive per line, '#' starts a
// comment):
//
//   species S @payload          declare species (@payload or @counter)
//   k1 = 1.0                    bind a rate constant
//   init E = 10                 initial molecule count (default 0)
//   r1: S + E -k1-> ES          reaction; rate token is a constant name or a
//   r2: ES -k2-> E !transmit    number; '!tag' marks an emitting reaction;
//   r3: F -0.05-> !transmit     an empty product side is allowed
//   inflow S = vsrc             external arrival stream; vsrc is bound via
//                               constants or supplied at analysis time
//
// Reactant/product terms are '+'-separated, each "<coeff> <name>" with an
// optional integer coefficient (default 1).
struct ParsedNetwork {
  ReactionNetwork network;
  std::map<std::string, double> constants;
  std::map<std::string, std::int64_t> initial_counts;   // by species name
  std::map<std::string, std::string> inflows;           // species -> rate name
};

ParsedNetwork parse_network(const std::string& text);
ParsedNetwork parse_network_file(const std::string& path);

// Initial state with the file's `init` counts applied (payload species get
// synthetic packets so queue lengths match counts).
NetworkState initial_state(const ParsedNetwork& parsed);

}  // namespace chemstack::chem
