#include "chemstack/stack/blueprint.hpp"

#include <sstream>

namespace chemstack::stack {

GenomeLayout GenomeLayout::build(const ModuleRegistry& registry,
                                 const ControlFilter& expose) {
  GenomeLayout layout;
  layout.registry_ = &registry;
  int offset = 0;
  for (const ModuleSpec* spec : registry.evolvable()) {
    ChromosomeLayout c;
    c.spec = spec;
    c.offset = offset;
    c.genes.push_back({GeneInfo::Role::Present, 0, 1, nullptr});
    for (const ControlSpec& ctl : spec->controls) {
      if (expose && !expose(spec->kind, ctl.name)) continue;
      c.genes.push_back({GeneInfo::Role::Control, ctl.lo, ctl.hi, &ctl});
    }
    for (std::size_t i = 0; i < spec->connectors.size(); ++i)
      c.genes.push_back(
          {GeneInfo::Role::Connector, 0, kConnectorGeneMax, nullptr});
    offset += static_cast<int>(c.genes.size());
    layout.chroms_.push_back(std::move(c));
  }
  layout.total_ = offset;
  return layout;
}

Genome GenomeLayout::random(Rng& rng) const {
  Genome g;
  g.genes.reserve(total_);
  for (const auto& c : chroms_)
    for (const auto& gene : c.genes)
      g.genes.push_back(gene.lo +
                        static_cast<int>(rng.below(
                            static_cast<std::uint64_t>(gene.domain_size()))));
  return g;
}

std::string GenomeLayout::to_text(const Genome& g) const {
  if (!length_ok(g)) throw StackError("genome length does not match layout");
  std::ostringstream out;
  for (const auto& c : chroms_) {
    out << c.spec->kind;
    for (std::size_t i = 0; i < c.genes.size(); ++i)
      out << ' ' << g.genes[c.offset + static_cast<int>(i)];
    out << '\n';
  }
  return out.str();
}

std::string GenomeLayout::to_line(const Genome& g) const {
  std::string text = to_text(g);
  if (!text.empty() && text.back() == '\n') text.pop_back();
  for (char& ch : text)
    if (ch == '\n') ch = '|';
  return text;
}

Genome GenomeLayout::parse(const std::string& text) const {
  std::string normalized = text;
  for (char& ch : normalized)
    if (ch == '|') ch = '\n';

  Genome g;
  std::istringstream in(normalized);
  std::string line;
  std::size_t slot = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (slot >= chroms_.size())
      throw StackError("blueprint has more chromosomes than the layout");
    const auto& c = chroms_[slot];
    std::istringstream fields(line);
    std::string kind;
    fields >> kind;
    if (kind != c.spec->kind)
      throw StackError("chromosome " + std::to_string(slot) + ": expected '" +
                       c.spec->kind + "', got '" + kind + "'");
    for (std::size_t i = 0; i < c.genes.size(); ++i) {
      long long v;
      if (!(fields >> v))
        throw StackError("chromosome '" + kind + "': expected " +
                         std::to_string(c.genes.size()) + " genes");
      g.genes.push_back(static_cast<int>(v));
    }
    std::string extra;
    if (fields >> extra)
      throw StackError("chromosome '" + kind + "': trailing token '" + extra +
                       "'");
    ++slot;
  }
  if (slot != chroms_.size())
    throw StackError("blueprint has " + std::to_string(slot) +
                     " chromosomes, layout expects " +
                     std::to_string(chroms_.size()));
  return g;
}

std::optional<double> GenomeLayout::control_value(
    const Genome& g, const std::string& kind,
    const std::string& control) const {
  if (!length_ok(g)) throw StackError("genome length does not match layout");
  for (const auto& c : chroms_) {
    if (c.spec->kind != kind) continue;
    for (std::size_t i = 0; i < c.genes.size(); ++i) {
      const GeneInfo& info = c.genes[i];
      if (info.role == GeneInfo::Role::Control && info.control->name == control)
        return info.control->value(
            info.control->clamp(g.genes[c.offset + static_cast<int>(i)]));
    }
  }
  return std::nullopt;
}

}  // namespace chemstack::stack
