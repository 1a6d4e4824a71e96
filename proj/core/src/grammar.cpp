#include "chemstack/chem/grammar.hpp"

#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>

namespace chemstack::chem {

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
  throw GrammarError("line " + std::to_string(line) + ": " + msg);
}

std::string strip(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// "2 ES" / "ES" -> (coeff, name)
std::pair<int, std::string> parse_term(const std::string& term, int line) {
  static const std::regex re(R"(^\s*(?:(\d+)\s+)?([A-Za-z_]\w*)\s*$)");
  std::smatch m;
  if (!std::regex_match(term, m, re)) fail(line, "bad species term '" + term + "'");
  int coeff = m[1].matched ? std::stoi(m[1]) : 1;
  if (coeff < 1) fail(line, "coefficient must be >= 1");
  return {coeff, m[2]};
}

std::vector<std::pair<int, std::string>> parse_side(const std::string& side,
                                                    int line) {
  std::vector<std::pair<int, std::string>> terms;
  if (strip(side).empty()) return terms;
  std::stringstream ss(side);
  std::string term;
  while (std::getline(ss, term, '+')) terms.push_back(parse_term(term, line));
  return terms;
}

}  // namespace

ParsedNetwork parse_network(const std::string& text) {
  ParsedNetwork out;
  struct PendingReaction {
    std::string id, lhs, rate, rhs, emit;
    int line;
  };
  std::vector<PendingReaction> pending;

  static const std::regex species_re(
      R"(^species\s+([A-Za-z_]\w*)\s+@(payload|counter)$)");
  static const std::regex const_re(
      R"(^([A-Za-z_]\w*)\s*=\s*([-+0-9.eE]+)$)");
  static const std::regex init_re(
      R"(^init\s+([A-Za-z_]\w*)\s*=\s*(\d+)$)");
  static const std::regex inflow_re(
      R"(^inflow\s+([A-Za-z_]\w*)(?:\s*=\s*([A-Za-z_]\w*))?$)");
  static const std::regex reaction_re(
      R"(^([A-Za-z_]\w*)\s*:\s*(.*?)-([A-Za-z_0-9.eE+]+)->(.*?)(?:!\s*([A-Za-z_]\w*))?$)");

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = strip(raw);
    if (s.empty()) continue;

    std::smatch m;
    if (std::regex_match(s, m, species_re)) {
      out.network.add_species(
          m[1], m[2] == "payload" ? SpeciesKind::Payload : SpeciesKind::Counter);
    } else if (std::regex_match(s, m, init_re)) {
      out.initial_counts[m[1]] = std::stoll(m[2]);
    } else if (std::regex_match(s, m, inflow_re)) {
      out.inflows[m[1]] = m[2].matched ? std::string(m[2]) : std::string();
    } else if (std::regex_match(s, m, reaction_re)) {
      pending.push_back({m[1], m[2], m[3], m[4],
                         m[5].matched ? std::string(m[5]) : std::string(),
                         line});
    } else if (std::regex_match(s, m, const_re)) {
      out.constants[m[1]] = std::stod(m[2]);
    } else {
      fail(line, "unrecognized directive '" + s + "'");
    }
  }

  // Reactions are resolved after the whole file is read so that constants and
  // species may be declared in any order.
  for (const auto& p : pending) {
    Reaction r;
    r.id = p.id;
    r.emit_tag = p.emit;

    double k;
    try {
      std::size_t used = 0;
      k = std::stod(p.rate, &used);
      if (used != p.rate.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      auto it = out.constants.find(p.rate);
      if (it == out.constants.end())
        fail(p.line, "unbound rate constant '" + p.rate + "'");
      k = it->second;
    }
    r.k = k;

    auto resolve = [&](const std::string& name) {
      auto id = out.network.find_species(name);
      if (!id) fail(p.line, "undeclared species '" + name + "'");
      return *id;
    };
    for (auto& [coeff, name] : parse_side(p.lhs, p.line))
      r.reactants.push_back({resolve(name), coeff});
    for (auto& [coeff, name] : parse_side(p.rhs, p.line))
      r.products.push_back({resolve(name), coeff});

    out.network.add_reaction(std::move(r));
  }

  for (auto& [name, cnt] : out.initial_counts) {
    (void)cnt;
    if (!out.network.find_species(name))
      throw GrammarError("init for undeclared species '" + name + "'");
  }
  for (auto& [name, rate] : out.inflows) {
    if (!out.network.find_species(name))
      throw GrammarError("inflow into undeclared species '" + name + "'");
    if (!rate.empty() && !out.constants.count(rate))
      throw GrammarError("inflow rate constant '" + rate + "' is unbound");
  }

  out.network.validate();
  return out;
}

ParsedNetwork parse_network_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw GrammarError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_network(ss.str());
}

NetworkState initial_state(const ParsedNetwork& parsed) {
  NetworkState st(parsed.network);
  for (auto& [name, cnt] : parsed.initial_counts)
    st.set_count(parsed.network.species_id(name), cnt);
  return st;
}

}  // namespace chemstack::chem
