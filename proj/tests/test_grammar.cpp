#include <doctest.h>

#include <string>

#include "chemstack/chem/grammar.hpp"
#include "chemstack/flow/model.hpp"

using namespace chemstack;
using namespace chemstack::chem;

namespace {

const char* kLoop = R"(# service loop
species S  @payload
species E  @counter
species ES @payload

k1 = 2.0
k2 = 0.5
vsrc = 7.0

init E = 10
init S = 3

r1: S + E -k1-> ES
r2: ES -k2-> E   ! transmit

inflow S = vsrc
)";

}  // namespace

TEST_CASE("the reference loop parses into the expected network") {
  ParsedNetwork pn = parse_network(kLoop);

  REQUIRE(pn.network.species().size() == 3);
  auto S = pn.network.species_id("S");
  auto E = pn.network.species_id("E");
  auto ES = pn.network.species_id("ES");
  CHECK(pn.network.is_payload(S));
  CHECK_FALSE(pn.network.is_payload(E));
  CHECK(pn.network.is_payload(ES));

  REQUIRE(pn.network.reactions().size() == 2);
  const Reaction& r1 = pn.network.reactions()[0];
  CHECK(r1.id == "r1");
  CHECK(r1.k == doctest::Approx(2.0));
  REQUIRE(r1.reactants.size() == 2);
  CHECK(r1.emit_tag.empty());
  const Reaction& r2 = pn.network.reactions()[1];
  CHECK(r2.k == doctest::Approx(0.5));
  CHECK(r2.emit_tag == "transmit");

  CHECK(pn.constants.at("vsrc") == doctest::Approx(7.0));
  REQUIRE(pn.inflows.count("S") == 1);
  CHECK(pn.inflows.at("S") == "vsrc");

  NetworkState st = initial_state(pn);
  CHECK(st.count(E) == 10);
  CHECK(st.count(S) == 3);
  // Payload initial counts are backed by synthetic packets.
  CHECK(st.queues[S].size() == 3);
  CHECK_NOTHROW(st.check());
}

TEST_CASE("numeric rate literals work in place of named constants") {
  ParsedNetwork pn = parse_network(
      "species A @counter\n"
      "decay: A -0.25-> \n");
  REQUIRE(pn.network.reactions().size() == 1);
  CHECK(pn.network.reactions()[0].k == doctest::Approx(0.25));
}

TEST_CASE("coefficients multiply species on either side") {
  ParsedNetwork pn = parse_network(
      "species A @counter\n"
      "species B @counter\n"
      "pair: 2 A -1.0-> B\n");
  const Reaction& r = pn.network.reactions()[0];
  REQUIRE(r.reactants.size() == 1);
  CHECK(r.reactants[0].second == 2);
}

TEST_CASE("parse errors carry line numbers and reasons") {
  CHECK_THROWS_WITH_AS(parse_network("species A @counter\nwat is this\n"),
                       doctest::Contains("line 2"), GrammarError);
  CHECK_THROWS_WITH_AS(
      parse_network("species A @counter\nr: A -kX-> \n"),
      doctest::Contains("unbound rate constant"), GrammarError);
  CHECK_THROWS_WITH_AS(
      parse_network("species A @counter\nr: A + Q -1-> A\n"),
      doctest::Contains("undeclared species"), GrammarError);
  CHECK_THROWS_AS(parse_network("init B = 4\n"), GrammarError);
  CHECK_THROWS_AS(parse_network("species A @counter\ninflow A = nope\n"),
                  GrammarError);
}

TEST_CASE("payload-flow validation applies to parsed files too") {
  // The payload reactant neither rides anywhere nor emits; the network-level
  // validation fires after parsing.
  CHECK_THROWS_AS(parse_network("species S @payload\n"
                                "sink: S -1-> \n"),
                  NetworkError);
}

TEST_CASE("parsed networks feed the symbolic derivation directly") {
  ParsedNetwork pn = parse_network(kLoop);
  auto pm = flow::derive_odes(pn);
  CHECK(pm.model.n_species() == 3);
  CHECK(pm.model.n_inflows() == 1);
  std::string odes;
  for (std::size_t i = 0; i < pm.model.n_species(); ++i)
    odes += pm.model.ode_string(i) + "\n";
  CHECK(odes.find("dc_S/dt") != std::string::npos);
  CHECK(odes.find("vsrc") != std::string::npos);
}
