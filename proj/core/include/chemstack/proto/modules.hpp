#pragma once

#include "chemstack/crc/crc.hpp"
#include "chemstack/sim/arrivals.hpp"
#include "chemstack/stack/blueprint.hpp"
#include "chemstack/stack/module.hpp"

namespace chemstack::proto {

// Fixed per-layer overheads, bytes per packet/frame.
inline constexpr int kPubSubHeader = 0;
inline constexpr int kTcpHeader = 20;
inline constexpr int kTcpTimestamps = 12;  // extra when timestamps are on
inline constexpr int kUdpHeader = 8;
inline constexpr int kCrcHeader = 0;  // shaper, not an encapsulation
inline constexpr int kIPv4Header = 20;
inline constexpr int kEthernetOverhead = 18;  // header + FCS

// Scenario-level knobs for module construction. Controls the genome does not
// carry (either unexposed or belonging to fixed-parameter machinery) take
// their values from here.
struct StackParams {
  crc::CrcConfig crc;  // e0 here is the default when not evolved
  chem::StepMode crc_mode = chem::StepMode::Stochastic;
  double tcp_init_rtt = 0.1;  // RTO seed before any measurement, s
};

// The module catalog of the composition space: fixed pubsub head and
// ethernet tail around the evolvable kinds {tcp, udp, crc, ipv4}, upper
// layers first. Registration order is genome slot order, and connectors bind
// strictly toward later slots.
stack::ModuleRegistry build_registry(const StackParams& params);

// Genome layout for a registry, honoring the CRC evolvable-control choices.
stack::GenomeLayout build_layout(const stack::ModuleRegistry& registry,
                                 const StackParams& params);

// --- fixed head/tail concrete types (the world wires through these) -------

class PubSubMod : public stack::StackModule {
 public:
  using StackModule::StackModule;

  // Application entry: wraps and sends. The packet must carry flow/payload.
  void submit(Packet&& p, double t);
  // Application exit.
  void set_deliver(std::function<void(Packet&&, double)> cb) {
    deliver_ = std::move(cb);
  }

  void handle_up(Packet&& p, double t) override;

  std::uint64_t submitted_payload() const { return submitted_payload_; }
  std::uint64_t delivered_payload() const { return delivered_payload_; }

  std::map<std::string, double> read_sensors(double) const override;

 private:
  std::function<void(Packet&&, double)> deliver_;
  std::uint64_t submitted_payload_ = 0;
  std::uint64_t delivered_payload_ = 0;
};

class EthernetMod : public stack::StackModule {
 public:
  using StackModule::StackModule;

  // Egress toward the wire.
  void set_phy_out(std::function<void(Packet&&, double)> cb) {
    phy_out_ = std::move(cb);
  }
  // Ingress from the wire: strips framing, hands upward.
  void from_wire(Packet&& p, double t);

  void handle_down(Packet&& p, double t) override;

  // Device byte counter, all headers included - the phy rate of the figures.
  std::uint64_t phy_bytes() const { return phy_bytes_; }
  std::uint64_t phy_frames() const { return phy_frames_; }

  std::map<std::string, double> read_sensors(double) const override;
  std::string persist() const override;
  void restore(const std::string& blob) override;

 private:
  std::function<void(Packet&&, double)> phy_out_;
  std::uint64_t phy_bytes_ = 0;
  std::uint64_t phy_frames_ = 0;
};

// --- traffic applications -------------------------------------------------

struct SourceProfile {
  int flows = 1;
  int payload = 1000;       // B per packet
  double mean_rate = 5e5;   // B/s per flow, long-run
  double on_len = 0.5;      // s
  double off_len = 0.5;     // s
  double phase_step = 0.25; // s, flow i bursts offset by i * phase_step
};

// On/off modulated Poisson packet generator feeding the head module. Burst
// rate is mean_rate * period / on_len, so the long-run mean is mean_rate.
class SourceApp {
 public:
  SourceApp(sim::Calendar& cal, Rng rng, SourceProfile profile,
            PubSubMod* head, bool deterministic = false);

  void start(double from);

  std::uint64_t submitted_payload() const { return submitted_payload_; }
  std::uint64_t submitted_packets() const { return submitted_packets_; }
  std::uint64_t acks_seen() const { return acks_seen_; }
  void note_ack(const Packet& p, double t);

 private:
  void emit(int flow, double t);

  SourceProfile profile_;
  PubSubMod* head_;
  std::vector<std::unique_ptr<sim::ArrivalProcess>> flows_;
  std::uint64_t next_id_ = 1;
  std::uint64_t submitted_payload_ = 0;
  std::uint64_t submitted_packets_ = 0;
  std::uint64_t acks_seen_ = 0;
};

// Receives at the far node, attributes each packet to a flow (transport port
// when present, flow 0 otherwise), and acknowledges every delivery with a
// small app-level packet sent back through its own stack.
class SinkApp {
 public:
  SinkApp(PubSubMod* head, int flows, int ack_payload);

  void deliver(Packet&& p, double t);  // wired as the head's deliver callback

  std::uint64_t delivered_payload() const { return delivered_payload_; }
  std::uint64_t delivered_packets() const { return delivered_packets_; }
  std::uint64_t attributed_payload() const { return attributed_payload_; }
  std::uint64_t misattributed_packets() const { return misattributed_; }
  double delay_sum() const { return delay_sum_; }

 private:
  PubSubMod* head_;
  int flows_;
  int ack_payload_;
  std::uint64_t next_ack_id_ = 1ull << 32;
  std::uint64_t delivered_payload_ = 0;
  std::uint64_t delivered_packets_ = 0;
  std::uint64_t attributed_payload_ = 0;
  std::uint64_t misattributed_ = 0;
  double delay_sum_ = 0.0;  // created -> delivered, data packets
};

}  // namespace chemstack::proto
