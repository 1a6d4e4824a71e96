#include "chemstack/stack/module.hpp"

#include <cmath>

namespace chemstack::stack {

double ControlSpec::value(int gene) const {
  if (gene < lo || gene > hi)
    throw StackError("control '" + name + "': gene " + std::to_string(gene) +
                     " outside [" + std::to_string(lo) + ", " +
                     std::to_string(hi) + "]");
  switch (map) {
    case Map::Identity:
      return static_cast<double>(gene);
    case Map::LogScale: {
      const int start = zero_off ? lo + 1 : lo;
      if (zero_off && gene == lo) return 0.0;
      if (hi == start) return out_lo;
      const double f =
          static_cast<double>(gene - start) / static_cast<double>(hi - start);
      return out_lo * std::pow(out_hi / out_lo, f);
    }
  }
  return 0.0;
}

void ModuleRegistry::add(ModuleSpec spec) {
  for (const auto& s : specs_)
    if (s.kind == spec.kind)
      throw StackError("duplicate module kind '" + spec.kind + "'");
  for (const auto& c : spec.controls)
    if (c.hi < c.lo)
      throw StackError("module '" + spec.kind + "': empty domain for '" +
                       c.name + "'");
  specs_.push_back(std::move(spec));
}

const ModuleSpec& ModuleRegistry::get(const std::string& kind) const {
  for (const auto& s : specs_)
    if (s.kind == kind) return s;
  throw StackError("unknown module kind '" + kind + "'");
}

bool ModuleRegistry::has(const std::string& kind) const {
  for (const auto& s : specs_)
    if (s.kind == kind) return true;
  return false;
}

std::vector<const ModuleSpec*> ModuleRegistry::evolvable() const {
  std::vector<const ModuleSpec*> out;
  for (const auto& s : specs_)
    if (!s.fixed) out.push_back(&s);
  return out;
}

std::string PersistentStore::key_for(const ModuleSpec& spec, int slot) {
  switch (spec.scope) {
    case Scope::Instance:
      return spec.kind + "#" + std::to_string(slot);
    case Scope::Kind:
      return spec.kind;
    case Scope::Interface:
      return "@" + spec.provides;
  }
  return spec.kind;
}

void PersistentStore::put(const std::string& key, std::string blob) {
  if (blob.empty())
    blobs_.erase(key);
  else
    blobs_[key] = std::move(blob);
}

std::optional<std::string> PersistentStore::get(const std::string& key) const {
  auto it = blobs_.find(key);
  if (it == blobs_.end()) return std::nullopt;
  return it->second;
}

}  // namespace chemstack::stack
