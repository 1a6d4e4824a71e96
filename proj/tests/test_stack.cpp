#include <doctest.h>

#include <cmath>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "chemstack/proto/modules.hpp"
#include "chemstack/stack/blueprint.hpp"
#include "chemstack/stack/compose.hpp"
#include "chemstack/stack/module.hpp"

using namespace chemstack;
using namespace chemstack::stack;

namespace {

// Minimal host: manual clock, no event delivery (nothing in these tests
// relies on timers firing).
struct StubHost final : ModuleHost {
  double t = 0.0;
  Rng r{424242};
  double now() const override { return t; }
  Rng& rng() override { return r; }
  void call_at(double, std::function<void()>) override {}
};

GenomeLayout default_layout(const proto::StackParams& params,
                            ModuleRegistry& storage) {
  storage = proto::build_registry(params);
  return proto::build_layout(storage, params);
}

Genome genome_of(const GenomeLayout& layout, const std::string& line) {
  return layout.parse(line);
}

}  // namespace

TEST_CASE("control mapping: identity and log scale") {
  ControlSpec lin{"e0", 1, 10000};
  CHECK(lin.value(1) == doctest::Approx(1.0));
  CHECK(lin.value(4817) == doctest::Approx(4817.0));
  CHECK_THROWS_AS(lin.value(0), StackError);

  ControlSpec kf;
  kf.name = "k_F";
  kf.lo = 0;
  kf.hi = 60;
  kf.map = ControlSpec::Map::LogScale;
  kf.out_lo = 0.01;
  kf.out_hi = 10.0;
  kf.zero_off = true;
  CHECK(kf.value(0) == doctest::Approx(0.0));  // gene 0 = stage disabled
  CHECK(kf.value(1) == doctest::Approx(0.01));
  CHECK(kf.value(60) == doctest::Approx(10.0));
  // Frozen midpoint of the log ramp: 0.01 * 1000^(35/59).
  CHECK(kf.value(36) == doctest::Approx(0.60218).epsilon(1e-4));
  for (int g = 1; g < 60; ++g) CHECK(kf.value(g) < kf.value(g + 1));
}

TEST_CASE("the default catalog induces the experiment genome layout") {
  proto::StackParams params;  // evolve_e0 on, evolve_k_F off
  ModuleRegistry reg;
  GenomeLayout layout = default_layout(params, reg);

  const auto& chroms = layout.chromosomes();
  REQUIRE(chroms.size() == 4);
  CHECK(chroms[0].spec->kind == "tcp");
  CHECK(chroms[1].spec->kind == "udp");
  CHECK(chroms[2].spec->kind == "crc");
  CHECK(chroms[3].spec->kind == "ipv4");
  // present + controls + one connector each:
  CHECK(chroms[0].genes.size() == 5);  // 3 tcp controls
  CHECK(chroms[1].genes.size() == 2);
  CHECK(chroms[2].genes.size() == 3);  // e0 exposed, k_F filtered out
  CHECK(chroms[3].genes.size() == 2);
  CHECK(layout.total_genes() == 12);

  proto::StackParams both = params;
  both.crc.evolve_k_F = true;
  ModuleRegistry reg2;
  GenomeLayout wide = default_layout(both, reg2);
  CHECK(wide.total_genes() == 13);
}

TEST_CASE("genome text round-trips in both forms") {
  proto::StackParams params;
  ModuleRegistry reg;
  GenomeLayout layout = default_layout(params, reg);
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    Genome g = layout.random(rng);
    REQUIRE(layout.length_ok(g));
    CHECK(layout.parse(layout.to_text(g)) == g);
    CHECK(layout.parse(layout.to_line(g)) == g);
  }
  CHECK_THROWS_AS(layout.parse("udp 0 0 | tcp 0 0 0 0 0"), StackError);
  CHECK_THROWS_AS(layout.parse("tcp 0 0 0 0 0"), StackError);
  CHECK_THROWS_AS(
      layout.parse("tcp 0 0 0 0 0 | udp 0 0 | crc 1 x 0 | ipv4 1 0"),
      StackError);
}

TEST_CASE("random genomes stay inside their gene domains") {
  proto::StackParams params;
  params.crc.evolve_k_F = true;
  ModuleRegistry reg;
  GenomeLayout layout = default_layout(params, reg);
  Rng rng(99);
  for (int i = 0; i < 500; ++i) {
    Genome g = layout.random(rng);
    for (const auto& c : layout.chromosomes())
      for (std::size_t k = 0; k < c.genes.size(); ++k) {
        const int v = g.genes[c.offset + static_cast<int>(k)];
        CHECK(v >= c.genes[k].lo);
        CHECK(v <= c.genes[k].hi);
      }
  }
}

TEST_CASE("control values are read back through the layout") {
  proto::StackParams params;
  ModuleRegistry reg;
  GenomeLayout layout = default_layout(params, reg);
  Genome g = genome_of(layout, "tcp 0 0 0 0 0|udp 0 0|crc 1 4817 0|ipv4 1 0");
  auto e0 = layout.control_value(g, "crc", "e0");
  REQUIRE(e0.has_value());
  CHECK(*e0 == doctest::Approx(4817.0));
  CHECK_FALSE(layout.control_value(g, "crc", "k_F").has_value());
  CHECK_FALSE(layout.control_value(g, "nope", "x").has_value());
}

TEST_CASE("composition wires the full chain in slot order") {
  proto::StackParams params;
  ModuleRegistry reg;
  GenomeLayout layout = default_layout(params, reg);
  PersistentStore store;
  StubHost host;

  auto r = compose(
      genome_of(layout, "tcp 1 0 0 0 0|udp 1 0|crc 1 100 0|ipv4 1 0"), layout,
      store, &host);
  auto* stack = std::get_if<ComposedStack>(&r);
  REQUIRE(stack != nullptr);
  CHECK(stack->path_string() == "pubsub/tcp/udp/crc/ipv4/ethernet");
  CHECK(stack->on_path("crc"));
  CHECK(stack->find("crc") != nullptr);
}

TEST_CASE("absent modules drop out and the head binds the topmost provider") {
  proto::StackParams params;
  ModuleRegistry reg;
  GenomeLayout layout = default_layout(params, reg);
  PersistentStore store;
  StubHost host;

  auto direct = compose(
      genome_of(layout, "tcp 0 0 0 0 0|udp 0 0|crc 0 100 0|ipv4 1 0"), layout,
      store, &host);
  CHECK(std::get<ComposedStack>(direct).path_string() ==
        "pubsub/ipv4/ethernet");

  auto bare = compose(
      genome_of(layout, "tcp 0 0 0 0 0|udp 0 0|crc 0 100 0|ipv4 0 0"), layout,
      store, &host);
  CHECK(std::get<ComposedStack>(bare).path_string() == "pubsub/ethernet");
}

TEST_CASE("connector genes select among later providers only") {
  proto::StackParams params;
  ModuleRegistry reg;
  GenomeLayout layout = default_layout(params, reg);
  PersistentStore store;
  StubHost host;

  // udp's providers here are crc then ipv4; gene parity picks between them.
  auto via_crc = compose(
      genome_of(layout, "tcp 0 0 0 0 0|udp 1 0|crc 1 100 0|ipv4 1 0"), layout,
      store, &host);
  CHECK(std::get<ComposedStack>(via_crc).path_string() ==
        "pubsub/udp/crc/ipv4/ethernet");

  auto skip_crc = compose(
      genome_of(layout, "tcp 0 0 0 0 0|udp 1 1|crc 1 100 0|ipv4 1 0"), layout,
      store, &host);
  const ComposedStack& s = std::get<ComposedStack>(skip_crc);
  CHECK(s.path_string() == "pubsub/udp/ipv4/ethernet");
  // The skipped module was instantiated but is off the forwarding path.
  CHECK_FALSE(s.on_path("crc"));
}

TEST_CASE("composition is total over random genomes") {
  proto::StackParams params;
  params.crc.evolve_k_F = true;
  ModuleRegistry reg;
  GenomeLayout layout = default_layout(params, reg);
  PersistentStore store;
  StubHost host;
  Rng rng(2024);
  int composed = 0;
  for (int i = 0; i < 500; ++i) {
    Genome g = layout.random(rng);
    auto r = compose(g, layout, store, &host);
    if (std::holds_alternative<ComposedStack>(r)) ++composed;
  }
  // Every in-domain genome composes: the catalog always has ethernet below.
  CHECK(composed == 500);
}

TEST_CASE("out-of-domain genes produce a composition error, not a throw") {
  proto::StackParams params;
  ModuleRegistry reg;
  GenomeLayout layout = default_layout(params, reg);
  PersistentStore store;
  StubHost host;
  Genome g = genome_of(layout, "tcp 0 0 0 0 0|udp 0 0|crc 1 4817 0|ipv4 1 0");
  g.genes[8] = 20000;  // crc e0 above its domain
  auto r = compose(g, layout, store, &host);
  auto* err = std::get_if<ComposeError>(&r);
  REQUIRE(err != nullptr);
  CHECK(err->reason.find("crc") != std::string::npos);

  Genome short_g;
  short_g.genes = {1, 2, 3};
  CHECK(std::holds_alternative<ComposeError>(
      compose(short_g, layout, store, &host)));
}

TEST_CASE("a service with no provider fails composition cleanly") {
  // A one-off catalog whose module needs a service nobody offers.
  ModuleRegistry reg;
  ModuleSpec head;
  head.kind = "head";
  head.provides = "app";
  head.connectors = {"packet"};
  head.fixed = true;
  head.make = [](const ModuleSpec& s) {
    return std::make_unique<StackModule>(s);
  };
  reg.add(std::move(head));
  ModuleSpec mid;
  mid.kind = "mid";
  mid.provides = "packet";
  mid.connectors = {"exotic"};
  mid.make = [](const ModuleSpec& s) {
    return std::make_unique<StackModule>(s);
  };
  reg.add(std::move(mid));
  ModuleSpec tail;
  tail.kind = "tail";
  tail.provides = "packet";
  tail.fixed = true;
  tail.make = [](const ModuleSpec& s) {
    return std::make_unique<StackModule>(s);
  };
  reg.add(std::move(tail));

  GenomeLayout layout = GenomeLayout::build(reg);
  PersistentStore store;
  StubHost host;
  Genome present = layout.parse("mid 1 0");
  auto r = compose(present, layout, store, &host);
  auto* err = std::get_if<ComposeError>(&r);
  REQUIRE(err != nullptr);
  CHECK(err->reason.find("exotic") != std::string::npos);

  Genome absent = layout.parse("mid 0 0");
  CHECK(std::holds_alternative<ComposedStack>(
      compose(absent, layout, store, &host)));
}

TEST_CASE("store keys follow the module scope") {
  ModuleSpec inst;
  inst.kind = "crc";
  inst.scope = Scope::Instance;
  ModuleSpec kind;
  kind.kind = "ethernet";
  kind.scope = Scope::Kind;
  ModuleSpec iface;
  iface.kind = "udp";
  iface.provides = "packet";
  iface.scope = Scope::Interface;
  CHECK(PersistentStore::key_for(inst, 2) != PersistentStore::key_for(inst, 3));
  CHECK(PersistentStore::key_for(kind, 2) == PersistentStore::key_for(kind, 3));
  CHECK(PersistentStore::key_for(iface, 0) ==
        PersistentStore::key_for(iface, 1));
}

TEST_CASE("detach persists counters that survive recomposition") {
  proto::StackParams params;
  ModuleRegistry reg;
  GenomeLayout layout = default_layout(params, reg);
  PersistentStore store;
  StubHost host;
  Genome g = genome_of(layout, "tcp 0 0 0 0 0|udp 1 1|crc 0 100 0|ipv4 1 0");

  std::uint64_t first_bytes = 0;
  {
    auto r = compose(g, layout, store, &host);
    auto& stack = std::get<ComposedStack>(r);
    auto* eth = dynamic_cast<proto::EthernetMod*>(stack.tail());
    REQUIRE(eth != nullptr);
    eth->set_phy_out([](Packet&&, double) {});
    auto* head = dynamic_cast<proto::PubSubMod*>(stack.head());
    REQUIRE(head != nullptr);
    for (int i = 0; i < 5; ++i) {
      Packet p;
      p.id = static_cast<std::uint64_t>(i + 1);
      p.flow = 0;
      p.payload_len = 1000;
      head->submit(std::move(p), 0.0);
    }
    first_bytes = eth->phy_bytes();
    CHECK(first_bytes > 0);
    stack.detach_to(store, 0.0);
  }
  CHECK_FALSE(store.empty());
  {
    auto r = compose(g, layout, store, &host);
    auto& stack = std::get<ComposedStack>(r);
    auto* eth = dynamic_cast<proto::EthernetMod*>(stack.tail());
    REQUIRE(eth != nullptr);
    // Device counters are Kind-scoped: the new instance continues the old
    // total instead of starting over.
    CHECK(eth->phy_bytes() == first_bytes);
  }
}
