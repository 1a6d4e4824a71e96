#include "chemstack/chem/network.hpp"

#include <algorithm>

namespace chemstack::chem {

SpeciesId ReactionNetwork::add_species(const std::string& name,
                                       SpeciesKind kind) {
  if (by_name_.count(name))
    throw NetworkError("duplicate species '" + name + "'");
  species_.push_back({name, kind});
  SpeciesId id = species_.size() - 1;
  by_name_[name] = id;
  return id;
}

SpeciesId ReactionNetwork::species_id(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end())
    throw NetworkError("unknown species '" + name + "'");
  return it->second;
}

std::optional<SpeciesId> ReactionNetwork::find_species(
    const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

void ReactionNetwork::add_reaction(Reaction r) {
  if (r.k < 0.0)
    throw NetworkError("reaction '" + r.id + "': negative rate constant");
  auto check_side = [&](const std::vector<std::pair<SpeciesId, int>>& side) {
    for (auto& [s, coeff] : side) {
      if (s >= species_.size())
        throw NetworkError("reaction '" + r.id + "': bad species index");
      if (coeff < 1)
        throw NetworkError("reaction '" + r.id + "': coefficient < 1");
    }
  };
  check_side(r.reactants);
  check_side(r.products);
  reactions_.push_back(std::move(r));
}

std::optional<SpeciesId> ReactionNetwork::payload_product(
    const Reaction& r) const {
  for (auto& [s, xi] : r.products) {
    (void)xi;
    if (is_payload(s)) return s;
  }
  return std::nullopt;
}

void ReactionNetwork::validate() const {
  for (const auto& r : reactions_) {
    int payload_in = 0;
    for (auto& [s, chi] : r.reactants)
      if (is_payload(s)) payload_in += chi;

    int payload_out_species = 0;
    int payload_out_coeff = 0;
    for (auto& [s, xi] : r.products)
      if (is_payload(s)) {
        ++payload_out_species;
        payload_out_coeff = xi;
      }

    if (payload_in > 0) {
      // Packets must either ride into one payload product or be emitted.
      if (payload_out_species == 0 && r.emit_tag.empty())
        throw NetworkError("reaction '" + r.id +
                           "' consumes payload but neither produces a payload "
                           "species nor emits");
      if (payload_out_species > 1)
        throw NetworkError("reaction '" + r.id +
                           "' produces more than one payload species");
      if (payload_out_species == 1 && payload_out_coeff != 1)
        throw NetworkError("reaction '" + r.id +
                           "' payload product coefficient must be 1");
    } else if (payload_out_species > 0) {
      throw NetworkError("reaction '" + r.id +
                         "' produces payload from counter-only reactants");
    }
  }
}

NetworkState::NetworkState(const ReactionNetwork& n)
    : net(&n),
      counts(n.species().size(), 0),
      queues(n.species().size()) {}

void NetworkState::set_count(SpeciesId s, std::int64_t n) {
  if (n < 0) throw NetworkError("negative count");
  if (net->is_payload(s)) {
    // Payload counts follow the queue; adjust by adding/removing synthetic
    // packets (used by tests and file-driven initial states).
    auto& q = queues.at(s);
    while (static_cast<std::int64_t>(q.size()) > n) q.pop_back();
    while (static_cast<std::int64_t>(q.size()) < n) {
      Packet p;
      p.id = 0;  // synthetic
      q.push_back(p);
    }
  }
  counts.at(s) = n;
}

void NetworkState::enqueue(SpeciesId s, Packet pkt) {
  if (!net->is_payload(s))
    throw NetworkError("enqueue into counter species '" +
                       net->species_at(s).name + "'");
  queues.at(s).push_back(std::move(pkt));
  counts.at(s) += 1;
}

void NetworkState::check() const {
  for (SpeciesId s = 0; s < counts.size(); ++s) {
    if (counts[s] < 0) throw NetworkError("negative count");
    if (net->is_payload(s) &&
        counts[s] != static_cast<std::int64_t>(queues[s].size()))
      throw NetworkError("count/queue mismatch for '" +
                         net->species_at(s).name + "'");
  }
}

}  // namespace chemstack::chem
