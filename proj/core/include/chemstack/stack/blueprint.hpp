#pragma once

#include "chemstack/stack/module.hpp"

namespace chemstack::stack {

// A genome is a flat integer array; the layout gives it structure: one
// chromosome per evolvable module kind, each holding a present flag, the
// exposed control genes, and one connector gene per required service.
struct Genome {
  std::vector<int> genes;
  bool operator==(const Genome&) const = default;
};

struct GeneInfo {
  enum class Role { Present, Control, Connector };
  Role role;
  int lo = 0;
  int hi = 0;
  const ControlSpec* control = nullptr;  // Role::Control only

  int domain_size() const { return hi - lo + 1; }
};

struct ChromosomeLayout {
  const ModuleSpec* spec;
  std::vector<GeneInfo> genes;
  int offset;  // index of this chromosome's first gene in the flat genome
};

// Connector genes share one small domain; resolution is modulo the provider
// count, so any value is meaningful regardless of how many providers exist.
inline constexpr int kConnectorGeneMax = 3;

// Built once per scenario from the registry plus a filter naming which
// controls the evolution engine may touch; unexposed controls fall back to
// scenario-configured defaults at composition time.
class GenomeLayout {
 public:
  using ControlFilter =
      std::function<bool(const std::string& kind, const std::string& control)>;

  static GenomeLayout build(const ModuleRegistry& registry,
                            const ControlFilter& expose = {});

  const std::vector<ChromosomeLayout>& chromosomes() const { return chroms_; }
  int total_genes() const { return total_; }
  const ModuleRegistry& registry() const { return *registry_; }

  Genome random(Rng& rng) const;
  // Structural check (length); domain violations are reported by compose.
  bool length_ok(const Genome& g) const {
    return static_cast<int>(g.genes.size()) == total_;
  }

  // One line per chromosome: "kind gene gene ...". to_line joins the lines
  // with '|' for single-line logs; parse accepts both forms.
  std::string to_text(const Genome& g) const;
  std::string to_line(const Genome& g) const;
  Genome parse(const std::string& text) const;

  // Reads a control gene's mapped value, or nullopt if that control is not
  // part of the genome.
  std::optional<double> control_value(const Genome& g, const std::string& kind,
                                      const std::string& control) const;

 private:
  const ModuleRegistry* registry_ = nullptr;
  std::vector<ChromosomeLayout> chroms_;
  int total_ = 0;
};

}  // namespace chemstack::stack
