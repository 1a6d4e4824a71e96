#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chemstack/packet.hpp"

namespace chemstack::chem {

struct NetworkError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Payload species queue packets (each molecule is one packet); counter species
// are plain token counts with no attached data.
enum class SpeciesKind { Payload, Counter };

using SpeciesId = std::size_t;

struct Species {
  std::string name;
  SpeciesKind kind = SpeciesKind::Counter;
};

// One reaction: reactants -> products at mass-action rate
//   k * prod_s c_s^chi(s).
// An emit tag marks reactions whose firing hands the consumed payload packet
// out of the network (a "transmit" event) instead of carrying it onward.
struct Reaction {
  std::string id;
  std::vector<std::pair<SpeciesId, int>> reactants;  // (species, chi >= 1)
  std::vector<std::pair<SpeciesId, int>> products;   // (species, xi >= 1)
  double k = 0.0;
  std::string emit_tag;  // empty = no emission

  int reactant_coeff(SpeciesId s) const {
    for (auto& [id_, chi] : reactants)
      if (id_ == s) return chi;
    return 0;
  }
  int product_coeff(SpeciesId s) const {
    for (auto& [id_, xi] : products)
      if (id_ == s) return xi;
    return 0;
  }
};

// Species table plus reaction list. Validation enforces the payload-flow rule:
// a reaction that consumes payload molecules must either carry them into
// exactly one payload product (coefficient 1) or emit them, so packets can
// never silently vanish. Payload products on reactions without payload
// reactants are rejected for the same reason (packets cannot appear from
// nothing).
class ReactionNetwork {
 public:
  SpeciesId add_species(const std::string& name, SpeciesKind kind);
  void add_reaction(Reaction r);

  SpeciesId species_id(const std::string& name) const;
  std::optional<SpeciesId> find_species(const std::string& name) const;

  const std::vector<Species>& species() const { return species_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  const Species& species_at(SpeciesId s) const { return species_.at(s); }

  bool is_payload(SpeciesId s) const {
    return species_.at(s).kind == SpeciesKind::Payload;
  }

  // For a validated reaction: the payload product that consumed packets are
  // carried into, if any.
  std::optional<SpeciesId> payload_product(const Reaction& r) const;

  void validate() const;

 private:
  std::vector<Species> species_;
  std::map<std::string, SpeciesId> by_name_;
  std::vector<Reaction> reactions_;
};

// Mutable simulation state: integer molecule counts, per-payload-species FIFO
// queues, and the simulation clock. Counts and queue lengths are kept in sync
// by the scheduler; check() verifies that invariant.
struct NetworkState {
  explicit NetworkState(const ReactionNetwork& net);

  const ReactionNetwork* net = nullptr;
  std::vector<std::int64_t> counts;
  std::vector<std::deque<Packet>> queues;  // empty deque for counter species
  double clock = 0.0;

  std::int64_t count(SpeciesId s) const { return counts.at(s); }
  void set_count(SpeciesId s, std::int64_t n);

  // Enqueue one packet into a payload species (count +1).
  void enqueue(SpeciesId s, Packet pkt);

  void check() const;
};

}  // namespace chemstack::chem
