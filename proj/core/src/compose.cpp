#include "chemstack/stack/compose.hpp"

#include <sstream>

namespace chemstack::stack {

StackModule* ComposedStack::find(const std::string& kind) const {
  for (StackModule* m : path_)
    if (m->spec().kind == kind) return m;
  return nullptr;
}

std::string ComposedStack::path_string() const {
  std::string s;
  for (StackModule* m : path_) {
    if (!s.empty()) s += '/';
    s += m->spec().kind;
  }
  return s;
}

void ComposedStack::detach_to(PersistentStore& store, double t) {
  for (StackModule* m : path_) m->flush(t);
  for (const Item& it : items_) {
    std::string blob = it.mod->persist();
    if (blob.empty()) continue;  // module keeps no cross-trial state
    store.put(PersistentStore::key_for(it.mod->spec(), it.slot),
              std::move(blob));
  }
}

std::variant<ComposedStack, ComposeError> compose(const Genome& genome,
                                                  const GenomeLayout& layout,
                                                  PersistentStore& store,
                                                  ModuleHost* host) {
  const auto& chroms = layout.chromosomes();
  if (!layout.length_ok(genome))
    return ComposeError{"genome length " + std::to_string(genome.genes.size()) +
                        " does not match layout"};

  const auto& all = layout.registry().all();
  if (all.size() < 2 || !all.front().fixed || !all.back().fixed)
    return ComposeError{"registry must begin and end with fixed modules"};
  const ModuleSpec& head_spec = all.front();
  const ModuleSpec& tail_spec = all.back();

  // Decode the chromosomes: presence, mapped control values, raw connector
  // genes. Out-of-domain genes invalidate the blueprint rather than throw.
  struct Decoded {
    const ModuleSpec* spec = nullptr;
    bool present = false;
    std::map<std::string, double> controls;
    std::vector<int> connectors;
  };
  std::vector<Decoded> decoded(chroms.size());
  for (std::size_t s = 0; s < chroms.size(); ++s) {
    const auto& c = chroms[s];
    Decoded& d = decoded[s];
    d.spec = c.spec;
    for (std::size_t i = 0; i < c.genes.size(); ++i) {
      const GeneInfo& info = c.genes[i];
      const int v = genome.genes[c.offset + static_cast<int>(i)];
      if (v < info.lo || v > info.hi)
        return ComposeError{"chromosome '" + c.spec->kind + "' gene " +
                            std::to_string(i) + " value " + std::to_string(v) +
                            " outside [" + std::to_string(info.lo) + ", " +
                            std::to_string(info.hi) + "]"};
      switch (info.role) {
        case GeneInfo::Role::Present:
          d.present = v != 0;
          break;
        case GeneInfo::Role::Control:
          d.controls[info.control->name] = info.control->value(v);
          break;
        case GeneInfo::Role::Connector:
          d.connectors.push_back(v);
          break;
      }
    }
  }

  // Resolve every present chromosome's connectors downward: the gene indexes
  // (modulo the list size) into the present later chromosomes offering the
  // required service. The fixed tail is not a chromosome; it serves as the
  // provider of last resort when no chromosome provides the service.
  const int kTail = static_cast<int>(chroms.size());
  std::vector<int> resolved(chroms.size(), kTail);
  for (std::size_t s = 0; s < chroms.size(); ++s) {
    if (!decoded[s].present) continue;
    const auto& connectors = decoded[s].spec->connectors;
    for (std::size_t ci = 0; ci < connectors.size(); ++ci) {
      const std::string& tag = connectors[ci];
      std::vector<int> providers;
      for (std::size_t j = s + 1; j < chroms.size(); ++j)
        if (decoded[j].present && decoded[j].spec->provides == tag)
          providers.push_back(static_cast<int>(j));
      if (providers.empty() && tail_spec.provides == tag)
        providers.push_back(kTail);
      if (providers.empty())
        return ComposeError{"no provider for service '" + tag +
                            "' required by '" + decoded[s].spec->kind + "'"};
      const int gene = decoded[s].connectors[ci];
      resolved[s] = providers[static_cast<std::size_t>(gene) %
                              providers.size()];
    }
  }

  // The head implicitly binds the topmost present module offering its
  // required service, falling back to the tail.
  int head_target = kTail;
  if (!head_spec.connectors.empty()) {
    const std::string& tag = head_spec.connectors.front();
    for (std::size_t j = 0; j < chroms.size(); ++j)
      if (decoded[j].present && decoded[j].spec->provides == tag) {
        head_target = static_cast<int>(j);
        break;
      }
  }

  ComposedStack stack;
  auto instantiate = [&](const ModuleSpec& spec, int slot,
                         const std::map<std::string, double>& controls) {
    auto mod = spec.make(spec);
    mod->attach_host(host);
    mod->configure(controls);
    if (auto blob = store.get(PersistentStore::key_for(spec, slot)))
      mod->restore(*blob);
    stack.items_.push_back({std::move(mod), slot, false});
    return stack.items_.back().mod.get();
  };

  StackModule* head = instantiate(head_spec, -1, {});
  std::vector<StackModule*> by_slot(chroms.size(), nullptr);
  for (std::size_t s = 0; s < chroms.size(); ++s)
    if (decoded[s].present)
      by_slot[s] = instantiate(*decoded[s].spec, static_cast<int>(s),
                               decoded[s].controls);
  StackModule* tail = instantiate(tail_spec, -1, {});

  // Wire the head-to-tail chain; targets are strictly increasing slots, so
  // this terminates at the tail.
  auto target_of = [&](int slot) {
    return slot == kTail ? tail : by_slot[slot];
  };
  StackModule* cur = head;
  int cur_slot = head_target;
  stack.path_.push_back(head);
  while (true) {
    StackModule* next = target_of(cur_slot);
    cur->wire_below(next);
    stack.path_.push_back(next);
    if (next == tail) break;
    cur = next;
    cur_slot = resolved[cur_slot];
  }
  for (ComposedStack::Item& it : stack.items_)
    for (StackModule* m : stack.path_)
      if (it.mod.get() == m) it.on_path = true;

  return stack;
}

}  // namespace chemstack::stack
