#include "chemstack/sim/scenario.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace chemstack::sim {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ScenarioError("line " + std::to_string(line) + ": " + what);
}

double as_double(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) fail(line, "trailing characters in number '" + v + "'");
    return d;
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception&) {
    fail(line, "expected a number, got '" + v + "'");
  }
}

long long as_int(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used != v.size()) fail(line, "trailing characters in integer '" + v + "'");
    return n;
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception&) {
    fail(line, "expected an integer, got '" + v + "'");
  }
}

bool as_bool(const std::string& v, int line) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  fail(line, "expected a boolean (0/1), got '" + v + "'");
}

}  // namespace

void Scenario::finalize() {
  if (fitness.sigma <= 0.0 && fitness.kind == evo::FitnessSpec::Kind::RateTarget)
    fitness.sigma = 0.05 * fitness.target;
  if (fitness.overhead_ref <= 0.0) {
    // Best attainable goodput share: payload over the leanest wire framing.
    const double p = world.source.payload;
    fitness.overhead_ref =
        p / (p + proto::kIPv4Header + proto::kEthernetOverhead);
  }

  if (world.link.bandwidth <= 0.0) throw ScenarioError("link.bandwidth must be positive");
  if (world.link.loss < 0.0 || world.link.loss > 1.0)
    throw ScenarioError("link.loss outside [0, 1]");
  if (world.source.flows < 1 || world.source.flows > 2)
    throw ScenarioError("source.flows must be 1 or 2");
  if (world.source.payload <= 0) throw ScenarioError("source.payload must be positive");
  if (world.source.mean_rate <= 0.0) throw ScenarioError("source.mean must be positive");
  if (world.source.on_len <= 0.0) throw ScenarioError("source.on must be positive");
  if (world.measure <= 0.0) throw ScenarioError("trial.measure must be positive");
  if (fitness.kind == evo::FitnessSpec::Kind::RateTarget &&
      fitness.target >= world.link.bandwidth)
    throw ScenarioError("fitness.target must stay below link.bandwidth");
  if (seed_optimum && optimum.empty())
    throw ScenarioError("evo.seed_optimum needs evo.optimum");
  try {
    world.params.crc.validate();
    evo.validate();
  } catch (const std::exception& e) {
    throw ScenarioError(e.what());
  }
}

Scenario Scenario::parse(std::istream& in, const std::string& name) {
  Scenario sc;
  sc.name = name;

  using Setter = std::function<void(Scenario&, const std::string&, int)>;
  static const std::map<std::string, Setter> keys = {
      {"schema",
       [](Scenario&, const std::string& v, int line) {
         if (as_int(v, line) != 1) fail(line, "unsupported schema '" + v + "'");
       }},
      {"link.bandwidth", [](Scenario& s, const std::string& v, int l) { s.world.link.bandwidth = as_double(v, l); }},
      {"link.delay", [](Scenario& s, const std::string& v, int l) { s.world.link.delay = as_double(v, l); }},
      {"link.loss", [](Scenario& s, const std::string& v, int l) { s.world.link.loss = as_double(v, l); }},
      {"link.queue", [](Scenario& s, const std::string& v, int l) { s.world.link.queue_bytes = as_int(v, l); }},
      {"cross.mean", [](Scenario& s, const std::string& v, int l) { s.world.cross.mean = as_double(v, l); }},
      {"cross.frame", [](Scenario& s, const std::string& v, int l) { s.world.cross.frame = static_cast<int>(as_int(v, l)); }},
      {"cross.on", [](Scenario& s, const std::string& v, int l) { s.world.cross.on_len = as_double(v, l); }},
      {"cross.off", [](Scenario& s, const std::string& v, int l) { s.world.cross.off_len = as_double(v, l); }},
      {"source.flows", [](Scenario& s, const std::string& v, int l) { s.world.source.flows = static_cast<int>(as_int(v, l)); }},
      {"source.payload", [](Scenario& s, const std::string& v, int l) { s.world.source.payload = static_cast<int>(as_int(v, l)); }},
      {"source.mean", [](Scenario& s, const std::string& v, int l) { s.world.source.mean_rate = as_double(v, l); }},
      {"source.on", [](Scenario& s, const std::string& v, int l) { s.world.source.on_len = as_double(v, l); }},
      {"source.off", [](Scenario& s, const std::string& v, int l) { s.world.source.off_len = as_double(v, l); }},
      {"source.phase", [](Scenario& s, const std::string& v, int l) { s.world.source.phase_step = as_double(v, l); }},
      {"sink.ack_payload", [](Scenario& s, const std::string& v, int l) { s.world.ack_payload = static_cast<int>(as_int(v, l)); }},
      {"trial.measure", [](Scenario& s, const std::string& v, int l) { s.world.measure = as_double(v, l); }},
      {"trial.min_settle", [](Scenario& s, const std::string& v, int l) { s.world.min_settle = as_double(v, l); }},
      {"trial.settle_margin", [](Scenario& s, const std::string& v, int l) { s.world.settle_margin = as_double(v, l); }},
      {"trial.settle_tolerance", [](Scenario& s, const std::string& v, int l) { s.world.settle_tolerance = as_double(v, l); }},
      {"trial.mode",
       [](Scenario& s, const std::string& v, int line) {
         if (v == "stochastic") {
           s.world.deterministic = false;
           s.world.params.crc_mode = chem::StepMode::Stochastic;
         } else if (v == "deterministic") {
           s.world.deterministic = true;
           s.world.params.crc_mode = chem::StepMode::Deterministic;
         } else {
           fail(line, "trial.mode must be stochastic or deterministic");
         }
       }},
      {"crc.k1", [](Scenario& s, const std::string& v, int l) { s.world.params.crc.k1 = as_double(v, l); }},
      {"crc.k2", [](Scenario& s, const std::string& v, int l) { s.world.params.crc.k2 = as_double(v, l); }},
      {"crc.k_F", [](Scenario& s, const std::string& v, int l) { s.world.params.crc.k_F = as_double(v, l); }},
      {"crc.e0", [](Scenario& s, const std::string& v, int l) { s.world.params.crc.e0 = as_double(v, l); }},
      {"crc.evolve_e0", [](Scenario& s, const std::string& v, int l) { s.world.params.crc.evolve_e0 = as_bool(v, l); }},
      {"crc.evolve_k_F", [](Scenario& s, const std::string& v, int l) { s.world.params.crc.evolve_k_F = as_bool(v, l); }},
      {"crc.sensor_window", [](Scenario& s, const std::string& v, int l) { s.world.params.crc.sensor_window = as_double(v, l); }},
      {"tcp.init_rtt", [](Scenario& s, const std::string& v, int l) { s.world.params.tcp_init_rtt = as_double(v, l); }},
      {"fitness.kind",
       [](Scenario& s, const std::string& v, int line) {
         if (v == "rate_target")
           s.fitness.kind = evo::FitnessSpec::Kind::RateTarget;
         else if (v == "constancy_delay")
           s.fitness.kind = evo::FitnessSpec::Kind::ConstancyDelay;
         else
           fail(line, "fitness.kind must be rate_target or constancy_delay");
       }},
      {"fitness.target", [](Scenario& s, const std::string& v, int l) { s.fitness.target = as_double(v, l); }},
      {"fitness.sigma", [](Scenario& s, const std::string& v, int l) { s.fitness.sigma = as_double(v, l); }},
      {"fitness.w2", [](Scenario& s, const std::string& v, int l) { s.fitness.w2 = as_double(v, l); }},
      {"fitness.w3", [](Scenario& s, const std::string& v, int l) { s.fitness.w3 = as_double(v, l); }},
      {"fitness.overhead_ref", [](Scenario& s, const std::string& v, int l) { s.fitness.overhead_ref = as_double(v, l); }},
      {"fitness.w_var", [](Scenario& s, const std::string& v, int l) { s.fitness.w_var = as_double(v, l); }},
      {"fitness.w_delay", [](Scenario& s, const std::string& v, int l) { s.fitness.w_delay = as_double(v, l); }},
      {"fitness.d_ref", [](Scenario& s, const std::string& v, int l) { s.fitness.d_ref = as_double(v, l); }},
      {"evo.population", [](Scenario& s, const std::string& v, int l) { s.evo.population_size = static_cast<int>(as_int(v, l)); }},
      {"evo.elite", [](Scenario& s, const std::string& v, int l) { s.evo.elite_size = static_cast<int>(as_int(v, l)); }},
      {"evo.crossover_p", [](Scenario& s, const std::string& v, int l) { s.evo.crossover_p = as_double(v, l); }},
      {"evo.mutation_p", [](Scenario& s, const std::string& v, int l) { s.evo.mutation_p = as_double(v, l); }},
      {"evo.generations", [](Scenario& s, const std::string& v, int l) { s.evo.generations = static_cast<int>(as_int(v, l)); }},
      {"evo.seed_optimum", [](Scenario& s, const std::string& v, int l) { s.seed_optimum = as_bool(v, l); }},
      {"evo.optimum", [](Scenario& s, const std::string& v, int) { s.optimum = v; }},
  };

  bool saw_schema = false;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos)
      raw.erase(hash);
    const std::string text = trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value'");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    const auto it = keys.find(key);
    if (it == keys.end()) fail(line, "unknown key '" + key + "'");
    if (key == "schema") saw_schema = true;
    it->second(sc, value, line);
  }
  if (!saw_schema) throw ScenarioError("missing 'schema = 1'");

  sc.finalize();
  return sc;
}

Scenario Scenario::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  return parse(in, std::filesystem::path(path).stem().string());
}

}  // namespace chemstack::sim
