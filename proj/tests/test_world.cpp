#include <doctest.h>

#include <string>

#include "chemstack/flow/analysis.hpp"
#include "chemstack/proto/modules.hpp"
#include "chemstack/sim/world.hpp"
#include "chemstack/stack/blueprint.hpp"

using namespace chemstack;
using namespace chemstack::sim;
using stack::Genome;
using stack::GenomeLayout;
using stack::ModuleRegistry;

namespace {

GenomeLayout experiment_layout(const proto::StackParams& params,
                               ModuleRegistry& storage) {
  storage = proto::build_registry(params);
  return proto::build_layout(storage, params);
}

// Small, fast world: 100 kB/s offered in 0.5 s bursts against a 1 MB/s link,
// rate controller at k2 = 1 so its transient clears in a few seconds.
WorldConfig quick_world() {
  WorldConfig cfg;
  cfg.link.bandwidth = 1e6;
  cfg.link.delay = 0.01;
  cfg.link.queue_bytes = 200000;
  cfg.source.flows = 1;
  cfg.source.payload = 1000;
  cfg.source.mean_rate = 1e5;
  cfg.params.crc.k1 = 1.0;
  cfg.params.crc.k2 = 1.0;
  cfg.measure = 6.0;
  cfg.min_settle = 2.0;
  cfg.settle_margin = 1.0;
  return cfg;
}

const char* kUdpCrc = "tcp 0 0 0 0 0|udp 1 0|crc 1 200 0|ipv4 1 0";
const char* kUdpOnly = "tcp 0 0 0 0 0|udp 1 0|crc 0 200 0|ipv4 1 0";

}  // namespace

TEST_CASE("one seed, one record: trials replay bit for bit") {
  proto::StackParams params;
  ModuleRegistry reg;
  GenomeLayout layout = experiment_layout(params, reg);
  WorldConfig cfg = quick_world();
  cfg.link.loss = 0.02;
  cfg.cross.mean = 1e5;
  Genome g = layout.parse(kUdpCrc);

  TrialRecord a = run_trial(layout, g, cfg, 4242);
  TrialRecord b = run_trial(layout, g, cfg, 4242);

  REQUIRE(a.valid);
  CHECK(a.blueprint == layout.to_line(g));
  CHECK(b.blueprint == a.blueprint);
  CHECK(b.path == a.path);
  CHECK(b.settle == a.settle);
  CHECK(b.duration == a.duration);
  CHECK(b.submitted_payload == a.submitted_payload);
  CHECK(b.transmitted_payload == a.transmitted_payload);
  CHECK(b.attributed_payload == a.attributed_payload);
  CHECK(b.delivered_payload == a.delivered_payload);
  CHECK(b.delivered_packets == a.delivered_packets);
  CHECK(b.wire_bytes == a.wire_bytes);
  CHECK(b.delay_sum == a.delay_sum);
  CHECK(b.phy_rate == a.phy_rate);
  CHECK(b.app_rate == a.app_rate);

  TrialRecord c = run_trial(layout, g, cfg, 4243);
  CHECK(c.phy_rate != a.phy_rate);
}

TEST_CASE("a comfortable stack moves the offered load") {
  proto::StackParams params;
  ModuleRegistry reg;
  GenomeLayout layout = experiment_layout(params, reg);
  WorldConfig cfg = quick_world();
  cfg.measure = 10.0;
  Genome g = layout.parse(kUdpOnly);

  TrialRecord rec = run_trial(layout, g, cfg, 7);
  REQUIRE(rec.valid);
  CHECK(rec.path == "pubsub/udp/ipv4/ethernet");
  // 100 kB/s long-run payload, loss-free link with headroom.
  CHECK(rec.mean_phy_rate() ==
        doctest::Approx(1e5 / 1000.0 * 1038.0).epsilon(0.25));
  CHECK(rec.delivery_ratio() > 0.95);
  CHECK(rec.delivery_ratio() <= 1.0);
  // Per-packet headers: udp 8 + ipv4 20 + ethernet 18 over 1000 B payload.
  CHECK(rec.goodput_share() ==
        doctest::Approx(1000.0 / (1000.0 + 8 + 20 + 18)).epsilon(0.05));
  CHECK(rec.mean_delay() > 0.0);
  CHECK(rec.mean_delay() < 0.5);
}

TEST_CASE("fractional windows round up to a short last bin") {
  proto::StackParams params;
  ModuleRegistry reg;
  GenomeLayout layout = experiment_layout(params, reg);
  WorldConfig cfg = quick_world();
  cfg.measure = 4.5;
  Genome g = layout.parse(kUdpOnly);

  TrialRecord rec = run_trial(layout, g, cfg, 11);
  REQUIRE(rec.valid);
  CHECK(rec.duration == doctest::Approx(4.5));
  REQUIRE(rec.phy_rate.size() == 5);
  REQUIRE(rec.app_rate.size() == 5);

  // Width-weighted bin rates must integrate back to the window totals.
  double app_sum = 0.0, phy_sum = 0.0;
  for (std::size_t k = 0; k < rec.app_rate.size(); ++k) {
    const double width = k + 1 < rec.app_rate.size() ? 1.0 : 0.5;
    app_sum += rec.app_rate[k] * width;
    phy_sum += rec.phy_rate[k] * width;
  }
  CHECK(app_sum == doctest::Approx(
                       static_cast<double>(rec.attributed_payload)));
  CHECK(phy_sum == doctest::Approx(static_cast<double>(rec.wire_bytes)));
}

TEST_CASE("payload is conserved across app, controller, link and sink") {
  proto::StackParams params;
  ModuleRegistry reg;
  GenomeLayout layout = experiment_layout(params, reg);
  WorldConfig cfg = quick_world();
  // Stress the pipe: loss, bursty cross-traffic, and a small waiting room so
  // overflow drops happen too.
  cfg.link.loss = 0.05;
  cfg.link.queue_bytes = 30000;
  cfg.cross.mean = 2e5;
  cfg.cross.on_len = 0.25;
  cfg.cross.off_len = 0.75;
  Genome g = layout.parse(kUdpCrc);

  WorldAudit audit;
  TrialRecord rec = run_trial(layout, g, cfg, 99, &audit);
  REQUIRE(rec.valid);
  REQUIRE(audit.source_payload > 0);
  CHECK(audit.delivered_payload > 0);
  CHECK(audit.link_dropped_payload > 0);

  // Every offered byte is accounted for at the stop instant: delivered,
  // dropped on the link, still on the link, or held by the controller.
  CHECK(audit.source_payload ==
        audit.delivered_payload + audit.link_dropped_payload +
            audit.link_in_flight_payload + audit.crc_buffered_payload);

  // One flow over udp: everything delivered is attributed.
  CHECK(rec.attributed_payload == rec.delivered_payload);
}

TEST_CASE("without ip on the path the link accepts nothing") {
  proto::StackParams params;
  ModuleRegistry reg;
  GenomeLayout layout = experiment_layout(params, reg);
  WorldConfig cfg = quick_world();
  Genome g = layout.parse("tcp 0 0 0 0 0|udp 1 0|crc 1 200 0|ipv4 0 0");

  WorldAudit audit;
  TrialRecord rec = run_trial(layout, g, cfg, 21, &audit);
  REQUIRE(rec.valid);
  CHECK(rec.path.find("ipv4") == std::string::npos);
  CHECK(audit.source_payload > 0);
  CHECK(rec.transmitted_payload == 0);
  CHECK(rec.attributed_payload == 0);
  CHECK(rec.delivered_payload == 0);
  CHECK(rec.delivery_ratio() == 0.0);
}

TEST_CASE("the warm-up follows the controller transient when one is wired") {
  proto::StackParams params;
  ModuleRegistry reg;
  GenomeLayout layout = experiment_layout(params, reg);
  WorldConfig cfg = quick_world();
  cfg.measure = 2.0;

  SUBCASE("no controller: the configured floor") {
    TrialRecord rec = run_trial(layout, layout.parse(kUdpOnly), cfg, 3);
    CHECK(rec.settle == doctest::Approx(cfg.min_settle));
  }

  SUBCASE("controller on path: flow estimate plus margin") {
    TrialRecord rec = run_trial(layout, layout.parse(kUdpCrc), cfg, 3);
    const double est = flow::crc_transient_settle_time(
        200.0, cfg.params.crc.k1, cfg.params.crc.k2, 0.0,
        cfg.settle_tolerance);
    CHECK(rec.settle == doctest::Approx(est + cfg.settle_margin));
    CHECK(rec.settle > cfg.min_settle);
  }

  SUBCASE("the floor still wins when it is larger") {
    cfg.min_settle = 50.0;
    cfg.measure = 1.0;
    TrialRecord rec = run_trial(layout, layout.parse(kUdpCrc), cfg, 3);
    CHECK(rec.settle == doctest::Approx(50.0));
  }
}

TEST_CASE("genomes that fail to compose come back unrun") {
  proto::StackParams params;
  ModuleRegistry reg;
  GenomeLayout layout = experiment_layout(params, reg);
  WorldConfig cfg = quick_world();
  Genome g = layout.parse(kUdpCrc);
  g.genes[8] = 20000;  // crc token count far outside its domain

  TrialRecord rec = run_trial(layout, g, cfg, 1);
  CHECK_FALSE(rec.valid);
  CHECK(rec.error.find("crc") != std::string::npos);
  CHECK(rec.duration == 0.0);
  CHECK(rec.phy_rate.empty());
}

TEST_CASE("retransmission earns its keep on a lossy link") {
  proto::StackParams params;
  ModuleRegistry reg;
  GenomeLayout layout = experiment_layout(params, reg);
  WorldConfig cfg = quick_world();
  cfg.link.loss = 0.05;
  cfg.measure = 8.0;

  Genome with_retx =
      layout.parse("tcp 1 0 1 0 0|udp 0 0|crc 0 200 0|ipv4 1 0");
  Genome without =
      layout.parse("tcp 1 0 0 0 0|udp 0 0|crc 0 200 0|ipv4 1 0");

  TrialRecord on = run_trial(layout, with_retx, cfg, 17);
  TrialRecord off = run_trial(layout, without, cfg, 17);
  REQUIRE(on.valid);
  REQUIRE(off.valid);
  CHECK(on.path == "pubsub/tcp/ipv4/ethernet");

  // Without recovery the first unrepaired hole stalls the cumulative window
  // for good; with it the flow keeps moving.
  CHECK(on.attributed_payload > 5 * off.attributed_payload);
  CHECK(on.delivery_ratio() > 0.9);
}
