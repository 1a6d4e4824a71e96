#include "chemstack/sim/world.hpp"

#include <cmath>

#include "chemstack/flow/analysis.hpp"
#include "chemstack/sim/arrivals.hpp"

namespace chemstack::sim {

namespace {

struct NodeHost final : stack::ModuleHost {
  NodeHost(Calendar* c, Rng r) : cal(c), rng_(r) {}
  double now() const override { return cal->now(); }
  Rng& rng() override { return rng_; }
  void call_at(double t, std::function<void()> fn) override {
    cal->call_at(t, std::move(fn));
  }

  Calendar* cal;
  Rng rng_;
};

// Cumulative counters sampled at bin edges.
struct Snap {
  std::uint64_t phy = 0;        // A device bytes
  std::uint64_t tx_payload = 0; // data payload onto the A->B link
  std::uint64_t app = 0;        // attributed payload at B
  std::uint64_t delivered = 0;
  std::uint64_t packets = 0;
  std::uint64_t submitted = 0;
  double delay = 0.0;
};

}  // namespace

TrialRecord run_trial(const stack::GenomeLayout& layout,
                      const stack::Genome& genome, const WorldConfig& cfg,
                      std::uint64_t seed, WorldAudit* audit) {
  TrialRecord rec;
  rec.blueprint = layout.to_line(genome);

  // Declared first so every closure the modules park in it dies before the
  // things those closures point at.
  Calendar cal;
  Rng root(seed);
  NodeHost host_a(&cal, root.derive(0xA11CE));
  NodeHost host_b(&cal, root.derive(0xB0B));
  stack::PersistentStore store_a, store_b;

  auto res_a = stack::compose(genome, layout, store_a, &host_a);
  if (auto* err = std::get_if<stack::ComposeError>(&res_a)) {
    rec.error = err->reason;
    return rec;
  }
  auto res_b = stack::compose(genome, layout, store_b, &host_b);
  stack::ComposedStack& node_a = std::get<stack::ComposedStack>(res_a);
  stack::ComposedStack& node_b = std::get<stack::ComposedStack>(res_b);
  rec.path = node_a.path_string();

  auto* head_a = dynamic_cast<proto::PubSubMod*>(node_a.head());
  auto* head_b = dynamic_cast<proto::PubSubMod*>(node_b.head());
  auto* eth_a = dynamic_cast<proto::EthernetMod*>(node_a.tail());
  auto* eth_b = dynamic_cast<proto::EthernetMod*>(node_b.tail());
  if (!head_a || !head_b || !eth_a || !eth_b) {
    rec.error = "world needs the fixed pubsub head and ethernet tail";
    return rec;
  }

  Link ab(cal, root.derive(0x11AB), cfg.link);
  Link ba(cal, root.derive(0x11BA), cfg.link);
  eth_a->set_phy_out([&ab](Packet&& p, double t) { ab.transmit(std::move(p), t); });
  eth_b->set_phy_out([&ba](Packet&& p, double t) { ba.transmit(std::move(p), t); });
  ab.set_deliver([eth_b](Packet&& p, double t) { eth_b->from_wire(std::move(p), t); });
  ba.set_deliver([eth_a](Packet&& p, double t) { eth_a->from_wire(std::move(p), t); });

  proto::SourceApp source(cal, root.derive(0x50CE), cfg.source, head_a,
                          cfg.deterministic);
  proto::SinkApp sink(head_b, cfg.source.flows, cfg.ack_payload);
  head_b->set_deliver([&sink](Packet&& p, double t) { sink.deliver(std::move(p), t); });
  head_a->set_deliver([&source](Packet&& p, double t) {
    if (p.is_ack) source.note_ack(p, t);
  });

  std::optional<ArrivalProcess> cross;
  if (cfg.cross.mean > 0.0 && cfg.cross.frame > 0) {
    const double period = cfg.cross.on_len + cfg.cross.off_len;
    const double burst =
        cfg.cross.mean * period / cfg.cross.on_len / cfg.cross.frame;
    cross.emplace(
        cal, root.derive(0xC0C0),
        chem::on_off_rate(burst, cfg.cross.on_len, cfg.cross.off_len, 0.0),
        [&ab, bytes = cfg.cross.frame](double t) { ab.inject_cross(bytes, t); },
        cfg.deterministic);
    cross->start(0.0);
  }

  // Measurement starts after the transient. With a CRC wired, the warm-up
  // follows the flow-level estimate for the genes actually in effect.
  double settle = cfg.min_settle;
  if (node_a.on_path("crc")) {
    const double e0 = layout.control_value(genome, "crc", "e0")
                          .value_or(cfg.params.crc.e0);
    const double k_f = layout.control_value(genome, "crc", "k_F")
                           .value_or(cfg.params.crc.k_F);
    settle = flow::crc_transient_settle_time(e0, cfg.params.crc.k1,
                                             cfg.params.crc.k2, k_f,
                                             cfg.settle_tolerance) +
             cfg.settle_margin;
    settle = std::max(settle, cfg.min_settle);
  }
  rec.settle = settle;
  rec.duration = cfg.measure;
  const int nbins = static_cast<int>(std::ceil(cfg.measure - 1e-9));
  rec.phy_rate.assign(nbins, 0.0);
  rec.app_rate.assign(nbins, 0.0);

  auto snap_now = [&] {
    Snap s;
    s.phy = eth_a->phy_bytes();
    s.tx_payload = ab.counters().our_payload_in;
    s.app = sink.attributed_payload();
    s.delivered = sink.delivered_payload();
    s.packets = sink.delivered_packets();
    s.submitted = source.submitted_payload();
    s.delay = sink.delay_sum();
    return s;
  };

  // Bin-edge samplers are scheduled before traffic starts, so at a shared
  // timestamp they run ahead of same-time dynamic events: bins are [a, b).
  Snap window_start, prev;
  cal.call_at(settle, [&] { window_start = prev = snap_now(); });
  for (int k = 1; k <= nbins; ++k) {
    const double left = settle + (k - 1);
    const double right = settle + std::min(static_cast<double>(k), cfg.measure);
    cal.call_at(right, [&, k, width = right - left] {
      const Snap s = snap_now();
      rec.phy_rate[k - 1] = static_cast<double>(s.phy - prev.phy) / width;
      rec.app_rate[k - 1] = static_cast<double>(s.app - prev.app) / width;
      prev = s;
    });
  }

  source.start(0.0);
  cal.run_until(settle + cfg.measure);

  rec.wire_bytes = prev.phy - window_start.phy;
  rec.transmitted_payload = prev.tx_payload - window_start.tx_payload;
  rec.attributed_payload = prev.app - window_start.app;
  rec.delivered_payload = prev.delivered - window_start.delivered;
  rec.delivered_packets = prev.packets - window_start.packets;
  rec.submitted_payload = prev.submitted - window_start.submitted;
  rec.delay_sum = prev.delay - window_start.delay;
  rec.valid = true;

  if (audit) {
    audit->source_payload = source.submitted_payload();
    audit->delivered_payload = sink.delivered_payload();
    audit->link_dropped_payload = ab.counters().our_payload_dropped;
    audit->link_in_flight_payload = ab.our_payload_in_flight();
    audit->crc_buffered_payload = 0;
    if (const stack::StackModule* crc = node_a.find("crc")) {
      const auto sensors = crc->read_sensors(cal.now());
      if (auto it = sensors.find("queued_payload"); it != sensors.end())
        audit->crc_buffered_payload = static_cast<std::uint64_t>(it->second);
    }
  }

  // Ordinary end-of-trial teardown; the stores are local, so this is purely
  // the lifecycle exercise (flush toward the wire, persist, destruct).
  node_a.detach_to(store_a, cal.now());
  node_b.detach_to(store_b, cal.now());
  return rec;
}

}  // namespace chemstack::sim
