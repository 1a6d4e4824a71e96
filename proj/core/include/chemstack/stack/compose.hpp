#pragma once

#include <variant>

#include "chemstack/stack/blueprint.hpp"

namespace chemstack::stack {

// Machine-readable composition failure.
struct ComposeError {
  std::string reason;
};

// A composed, wired stack. All present modules are instantiated (and get
// their persisted state back); only the chain reachable from the head
// carries traffic. Connector genes bind strictly downward - each resolves
// into the providers among later chromosomes plus the fixed tail - so the
// wired graph is acyclic by construction.
class ComposedStack {
 public:
  struct Item {
    std::unique_ptr<StackModule> mod;
    int slot;      // genome chromosome index; -1 for the fixed head/tail
    bool on_path;  // reachable from the head
  };

  StackModule* head() const { return path_.front(); }
  StackModule* tail() const { return path_.back(); }
  const std::vector<StackModule*>& path() const { return path_; }
  const std::vector<Item>& items() const { return items_; }

  // First on-path instance of a kind, or nullptr.
  StackModule* find(const std::string& kind) const;
  bool on_path(const std::string& kind) const { return find(kind) != nullptr; }

  // "pubsub/crc/ipv4/ethernet"
  std::string path_string() const;

  // Flush in-flight packets toward the wire (top-down), then write every
  // module's state blob to the store.
  void detach_to(PersistentStore& store, double t);

 private:
  friend std::variant<ComposedStack, ComposeError> compose(
      const Genome&, const GenomeLayout&, PersistentStore&, ModuleHost*);

  std::vector<Item> items_;
  std::vector<StackModule*> path_;
};

// Build a running stack from a genome. Total over its inputs: any
// length-correct genome yields either a stack or a ComposeError with the
// reason; it never throws for gene-level problems.
std::variant<ComposedStack, ComposeError> compose(const Genome& genome,
                                                  const GenomeLayout& layout,
                                                  PersistentStore& store,
                                                  ModuleHost* host);

}  // namespace chemstack::stack
