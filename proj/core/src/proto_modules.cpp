#include "chemstack/proto/modules.hpp"

#include <nlohmann/json.hpp>

#include <set>

namespace chemstack {

const char* proto_name(Proto p) {
  switch (p) {
    case Proto::None: return "none";
    case Proto::PubSub: return "pubsub";
    case Proto::TcpLite: return "tcp";
    case Proto::Udp: return "udp";
    case Proto::Crc: return "crc";
    case Proto::IPv4: return "ipv4";
    case Proto::Ethernet: return "ethernet";
  }
  return "?";
}

}  // namespace chemstack

namespace chemstack::proto {

using nlohmann::json;
using stack::ModuleSpec;

// --- pubsub ---------------------------------------------------------------

void PubSubMod::submit(Packet&& p, double t) {
  submitted_payload_ += static_cast<std::uint64_t>(p.payload_len);
  p.push_header(Proto::PubSub, kPubSubHeader);
  pass_down(std::move(p), t);
}

void PubSubMod::handle_up(Packet&& p, double t) {
  if (p.top_header() == Proto::PubSub) p.pop_header();
  delivered_payload_ += static_cast<std::uint64_t>(p.payload_len);
  if (deliver_) deliver_(std::move(p), t);
}

std::map<std::string, double> PubSubMod::read_sensors(double) const {
  return {{"submitted_bytes", static_cast<double>(submitted_payload_)},
          {"delivered_bytes", static_cast<double>(delivered_payload_)}};
}

// --- ethernet -------------------------------------------------------------

void EthernetMod::handle_down(Packet&& p, double t) {
  p.push_header(Proto::Ethernet, kEthernetOverhead);
  p.phy_tx = t;
  phy_bytes_ += static_cast<std::uint64_t>(p.wire_len());
  ++phy_frames_;
  if (phy_out_) phy_out_(std::move(p), t);
}

void EthernetMod::from_wire(Packet&& p, double t) {
  if (p.top_header() == Proto::Ethernet) p.pop_header();
  pass_up(std::move(p), t);
}

std::map<std::string, double> EthernetMod::read_sensors(double) const {
  return {{"phy_bytes", static_cast<double>(phy_bytes_)},
          {"phy_frames", static_cast<double>(phy_frames_)}};
}

std::string EthernetMod::persist() const {
  return json{{"phy_bytes", phy_bytes_}, {"phy_frames", phy_frames_}}.dump();
}

void EthernetMod::restore(const std::string& blob) {
  if (blob.empty()) return;
  const json j = json::parse(blob);
  phy_bytes_ = j.value("phy_bytes", std::uint64_t{0});
  phy_frames_ = j.value("phy_frames", std::uint64_t{0});
}

// --- ipv4 -----------------------------------------------------------------

namespace {

class IPv4Mod : public stack::StackModule {
 public:
  using StackModule::StackModule;

  void handle_down(Packet&& p, double t) override {
    p.push_header(Proto::IPv4, kIPv4Header);
    pass_down(std::move(p), t);
  }
  void handle_up(Packet&& p, double t) override {
    if (p.top_header() == Proto::IPv4) p.pop_header();
    pass_up(std::move(p), t);
  }
};

// --- udp ------------------------------------------------------------------

class UdpMod : public stack::StackModule {
 public:
  using StackModule::StackModule;

  void handle_down(Packet&& p, double t) override {
    p.udp_port = p.flow;  // demultiplexing key carried by the header
    p.push_header(Proto::Udp, kUdpHeader);
    pass_down(std::move(p), t);
  }
  void handle_up(Packet&& p, double t) override {
    if (p.top_header() == Proto::Udp) p.pop_header();
    pass_up(std::move(p), t);
  }
};

// --- tcp-lite -------------------------------------------------------------

// Minimal sliding-window transport: window of 16 segments per flow, fixed
// RTO at twice the smoothed RTT, duplicate suppression at the receiver, and
// the three controls of interest - ack type (cumulative/selective), recovery
// (off/timeout) and timestamps (off/on, +12 B per segment but RTT samples on
// retransmitted segments become usable).
class TcpLiteMod : public stack::StackModule {
 public:
  TcpLiteMod(const ModuleSpec& spec, const StackParams& params)
      : StackModule(spec), init_rtt_(params.tcp_init_rtt) {}

  void configure(const std::map<std::string, double>& c) override {
    auto get = [&](const char* name, double dflt) {
      auto it = c.find(name);
      return it == c.end() ? dflt : it->second;
    };
    selective_ = get("ack_type", 0.0) >= 0.5;
    retx_on_ = get("retransmission", 0.0) >= 0.5;
    ts_on_ = get("timestamps", 0.0) >= 0.5;
  }

  void handle_down(Packet&& p, double t) override {
    SendFlow& sf = tx_[p.flow];
    const std::uint32_t seq = sf.next_seq++;
    Segment seg;
    seg.pkt = p;  // pre-header copy kept for retransmission
    sf.outstanding.emplace(seq, std::move(seg));
    pump(p.flow, sf, t);
  }

  void handle_up(Packet&& p, double t) override {
    if (p.top_header() != Proto::TcpLite) {  // not ours; pass through
      pass_up(std::move(p), t);
      return;
    }
    p.pop_header();
    const int flow = p.udp_port >= 0 ? p.udp_port : p.flow;
    if (p.is_tcp_ctl) {
      on_ack(flow, p, t);
      return;  // control segments stop here
    }
    on_data(flow, std::move(p), t);
  }

  void flush(double) override {
    // Unsent/unacked segments are dropped at teardown; only the sequence
    // counters survive through persist().
    tx_.clear();
  }

  std::string persist() const override {
    json flows = json::object();
    for (const auto& [flow, sf] : tx_)
      flows[std::to_string(flow)] = {{"next_seq", sf.next_seq},
                                     {"srtt", sf.srtt}};
    json rcv = json::object();
    for (const auto& [flow, rf] : rx_)
      rcv[std::to_string(flow)] = {{"rcv_next", rf.rcv_next}};
    return json{{"tx", flows}, {"rx", rcv}}.dump();
  }

  void restore(const std::string& blob) override {
    if (blob.empty()) return;
    const json j = json::parse(blob);
    for (const auto& [key, val] : j.value("tx", json::object()).items()) {
      SendFlow& sf = tx_[std::stoi(key)];
      sf.next_seq = val.value("next_seq", std::uint32_t{0});
      sf.base = sf.next_seq;
      sf.srtt = val.value("srtt", -1.0);
    }
    for (const auto& [key, val] : j.value("rx", json::object()).items())
      rx_[std::stoi(key)].rcv_next = val.value("rcv_next", std::uint32_t{0});
  }

  std::map<std::string, double> read_sensors(double) const override {
    double outstanding = 0, dups = 0, retx = 0;
    for (const auto& [f, sf] : tx_) {
      for (const auto& [seq, seg] : sf.outstanding)  // in flight, not backlog
        if (seg.sent_at >= 0.0) outstanding += 1.0;
      retx += static_cast<double>(sf.retx_count);
    }
    for (const auto& [f, rf] : rx_) dups += static_cast<double>(rf.dups);
    return {{"outstanding", outstanding},
            {"retransmits", retx},
            {"duplicates", dups}};
  }

 private:
  static constexpr std::uint32_t kWindow = 16;

  struct Segment {
    Packet pkt;
    double sent_at = -1.0;  // < 0: not yet on the wire
    bool retxed = false;
  };
  struct SendFlow {
    std::uint32_t next_seq = 0;
    std::uint32_t base = 0;
    std::map<std::uint32_t, Segment> outstanding;
    double srtt = -1.0;
    std::uint64_t timer_epoch = 0;
    bool timer_live = false;  // a pending calendar entry matches timer_epoch
    std::uint64_t retx_count = 0;
    // One RTT sample in flight at a time; retransmission makes it ambiguous
    // unless timestamps can tell the copies apart.
    std::uint32_t timed_seq = 0;
    bool timing = false;
  };
  struct RecvFlow {
    std::uint32_t rcv_next = 0;
    std::set<std::uint32_t> ahead;  // received out of order
    std::uint64_t dups = 0;
  };

  int hdr() const { return kTcpHeader + (ts_on_ ? kTcpTimestamps : 0); }
  double rto(const SendFlow& sf) const {
    return 2.0 * (sf.srtt > 0.0 ? sf.srtt : init_rtt_);
  }

  void send_segment(int flow, SendFlow& sf, std::uint32_t seq, double t,
                    bool rtx) {
    Segment& seg = sf.outstanding.at(seq);
    Packet wire = seg.pkt;
    wire.seq = seq;
    wire.udp_port = flow;
    wire.retransmit = rtx;
    wire.push_header(Proto::TcpLite, hdr());
    if (rtx) {
      seg.retxed = true;
      ++sf.retx_count;
      if (!ts_on_ && sf.timing && sf.timed_seq == seq)
        sf.timing = false;  // two copies in flight, sample is ambiguous
    } else {
      seg.sent_at = t;
      if (!sf.timing) {
        sf.timing = true;
        sf.timed_seq = seq;
      }
    }
    pass_down(std::move(wire), t);
  }

  // Send everything unsent inside the window, then keep the timer armed.
  // A zero-delay wire can bounce the ack back synchronously from inside
  // send_segment, erasing outstanding entries under us — so walk by key
  // and re-look-up after every send instead of holding an iterator.
  void pump(int flow, SendFlow& sf, double t) {
    std::uint32_t cursor = sf.base;
    while (true) {
      auto it = sf.outstanding.lower_bound(cursor);
      while (it != sf.outstanding.end() && it->second.sent_at >= 0.0) ++it;
      if (it == sf.outstanding.end() || it->first >= sf.base + kWindow) break;
      cursor = it->first + 1;
      send_segment(flow, sf, it->first, t, false);
    }
    ensure_timer(flow, sf, t);
  }

  // The timer covers the oldest unacked segment: started when data is first
  // in flight, restarted only by timeouts and by acks that make progress,
  // stopped when everything is acked. New submissions must never push the
  // deadline out, or steady load starves the timer and a loss stalls the
  // window for good.
  void ensure_timer(int flow, SendFlow& sf, double t) {
    if (sf.timer_live || sf.outstanding.empty()) return;
    start_timer(flow, sf, t);
  }

  void start_timer(int flow, SendFlow& sf, double t) {
    if (!retx_on_ || !host()) return;
    const std::uint64_t e = ++sf.timer_epoch;
    sf.timer_live = true;
    host()->call_at(t + rto(sf), [this, flow, e] {
      auto it = tx_.find(flow);
      if (it == tx_.end()) return;
      SendFlow& sf2 = it->second;
      if (e != sf2.timer_epoch) return;  // superseded by a restart
      sf2.timer_live = false;
      if (sf2.outstanding.empty()) return;
      const double now = host()->now();
      auto first = sf2.outstanding.begin();
      if (first->second.sent_at >= 0.0)
        send_segment(flow, sf2, first->first, now, true);
      start_timer(flow, sf2, now);
    });
  }

  void stop_timer(SendFlow& sf) {
    ++sf.timer_epoch;
    sf.timer_live = false;
  }

  void note_acked(SendFlow& sf, std::uint32_t seq, const Segment& seg,
                  double t) {
    if (!sf.timing || sf.timed_seq != seq) return;
    sf.timing = false;
    if (seg.sent_at < 0.0) return;
    if (seg.retxed && !ts_on_) return;  // ambiguous sample without timestamps
    const double sample = t - seg.sent_at;
    sf.srtt = sf.srtt < 0.0 ? sample : 0.875 * sf.srtt + 0.125 * sample;
  }

  void on_ack(int flow, const Packet& ack, double t) {
    auto it = tx_.find(flow);
    if (it == tx_.end()) return;
    SendFlow& sf = it->second;
    bool progress = false;
    if (selective_) {
      auto seg = sf.outstanding.find(ack.ack_no);
      if (seg != sf.outstanding.end()) {
        note_acked(sf, seg->first, seg->second, t);
        sf.outstanding.erase(seg);
        progress = true;
      }
    } else {
      while (!sf.outstanding.empty() &&
             sf.outstanding.begin()->first < ack.ack_no) {
        note_acked(sf, sf.outstanding.begin()->first,
                   sf.outstanding.begin()->second, t);
        sf.outstanding.erase(sf.outstanding.begin());
        progress = true;
      }
    }
    sf.base = sf.outstanding.empty() ? sf.next_seq
                                     : sf.outstanding.begin()->first;
    if (progress) {
      if (sf.outstanding.empty())
        stop_timer(sf);
      else
        start_timer(flow, sf, t);
    }
    pump(flow, sf, t);
  }

  void on_data(int flow, Packet&& p, double t) {
    RecvFlow& rf = rx_[flow];
    bool dup = false;
    if (p.seq < rf.rcv_next || rf.ahead.count(p.seq)) {
      dup = true;
      ++rf.dups;
    } else {
      rf.ahead.insert(p.seq);
      while (rf.ahead.count(rf.rcv_next)) {
        rf.ahead.erase(rf.rcv_next);
        ++rf.rcv_next;
      }
    }

    Packet ack;
    ack.flow = flow;
    ack.udp_port = flow;
    ack.is_tcp_ctl = true;
    ack.payload_len = 0;
    ack.created = t;
    ack.ack_no = selective_ ? p.seq : rf.rcv_next;
    ack.push_header(Proto::TcpLite, hdr());
    pass_down(std::move(ack), t);

    if (!dup) pass_up(std::move(p), t);
  }

  bool selective_ = false;
  bool retx_on_ = false;
  bool ts_on_ = false;
  double init_rtt_;
  std::map<int, SendFlow> tx_;
  std::map<int, RecvFlow> rx_;
};

// --- crc (stack wrapper around the chemistry) -----------------------------

class CrcStackMod : public stack::StackModule {
 public:
  CrcStackMod(const ModuleSpec& spec, const StackParams& params)
      : StackModule(spec), params_(params) {}

  void configure(const std::map<std::string, double>& c) override {
    crc::CrcConfig cfg = params_.crc;
    if (auto it = c.find("e0"); it != c.end()) cfg.e0 = it->second;
    if (auto it = c.find("k_F"); it != c.end()) cfg.k_F = it->second;
    crc_ = std::make_unique<crc::Crc>(cfg, params_.crc_mode);
    crc_->set_transmit_handler([this](Packet&& p, double t) {
      pass_down(std::move(p), t);
    });
  }

  void handle_down(Packet&& p, double t) override {
    p.push_header(Proto::Crc, kCrcHeader);
    crc_->enqueue(std::move(p), t);
    reschedule();
  }

  void handle_up(Packet&& p, double t) override {
    if (p.top_header() == Proto::Crc) p.pop_header();
    pass_up(std::move(p), t);
  }

  void flush(double t) override {
    ++epoch_;  // chemistry stops; queued packets leave directly
    if (!crc_) return;
    for (Packet& p : crc_->drain_queues()) pass_down(std::move(p), t);
  }

  std::string persist() const override {
    if (!crc_) return {};
    return json{{"enqueued", crc_->enqueued_total()},
                {"transmitted", crc_->transmitted_total()}}
        .dump();
  }

  void restore(const std::string& blob) override {
    if (!crc_ || blob.empty()) return;
    const json j = json::parse(blob);
    crc_->restore_counters(j.value("enqueued", std::uint64_t{0}),
                           j.value("transmitted", std::uint64_t{0}));
  }

  std::map<std::string, double> read_sensors(double t) const override {
    if (!crc_) return {};
    const crc::CrcSensors s = crc_->sensors(t);
    return {{"queue_len", static_cast<double>(s.queue_len)},
            {"free_tokens", static_cast<double>(crc_->free_tokens())},
            {"in_rate", s.in_rate},
            {"out_rate", s.out_rate},
            {"mean_delay", s.mean_delay},
            {"queued_payload", static_cast<double>(crc_->queued_payload())},
            {"enqueued", static_cast<double>(crc_->enqueued_total())},
            {"transmitted", static_cast<double>(crc_->transmitted_total())}};
  }

  crc::Crc* chemistry() { return crc_.get(); }

 private:
  void reschedule() {
    if (!host()) return;
    const std::uint64_t e = ++epoch_;
    const auto when = crc_->peek(host()->rng());
    if (!when) return;
    host()->call_at(*when, [this, e] {
      if (e != epoch_) return;  // invalidated by a later state change
      crc_->fire_pending(host()->now());
      reschedule();
    });
  }

  StackParams params_;
  std::unique_ptr<crc::Crc> crc_;
  std::uint64_t epoch_ = 0;
};

}  // namespace

// --- registry -------------------------------------------------------------

stack::ModuleRegistry build_registry(const StackParams& params) {
  stack::ModuleRegistry r;

  ModuleSpec pubsub;
  pubsub.kind = "pubsub";
  pubsub.provides = "app";
  pubsub.connectors = {"packet"};
  pubsub.sensors = {"submitted_bytes", "delivered_bytes"};
  pubsub.fixed = true;
  pubsub.scope = stack::Scope::Kind;
  pubsub.make = [](const ModuleSpec& s) {
    return std::make_unique<PubSubMod>(s);
  };
  r.add(std::move(pubsub));

  ModuleSpec tcp;
  tcp.kind = "tcp";
  tcp.provides = "packet";
  tcp.connectors = {"packet"};
  tcp.controls = {{"ack_type", 0, 1}, {"retransmission", 0, 1},
                  {"timestamps", 0, 1}};
  tcp.sensors = {"outstanding", "retransmits", "duplicates"};
  tcp.scope = stack::Scope::Instance;
  tcp.make = [params](const ModuleSpec& s) {
    return std::make_unique<TcpLiteMod>(s, params);
  };
  r.add(std::move(tcp));

  ModuleSpec udp;
  udp.kind = "udp";
  udp.provides = "packet";
  udp.connectors = {"packet"};
  udp.scope = stack::Scope::Instance;
  udp.make = [](const ModuleSpec& s) { return std::make_unique<UdpMod>(s); };
  r.add(std::move(udp));

  ModuleSpec crc;
  crc.kind = "crc";
  crc.provides = "packet";
  crc.connectors = {"packet"};
  {
    stack::ControlSpec e0{"e0", 1, 10000};
    stack::ControlSpec kf;
    kf.name = "k_F";
    kf.lo = 0;
    kf.hi = 60;  // 0 = disabled, 1..60 spread over [0.01, 10]
    kf.map = stack::ControlSpec::Map::LogScale;
    kf.out_lo = 0.01;
    kf.out_hi = 10.0;
    kf.zero_off = true;
    crc.controls = {e0, kf};
  }
  crc.sensors = {"queue_len", "in_rate", "out_rate", "mean_delay"};
  crc.scope = stack::Scope::Instance;
  crc.make = [params](const ModuleSpec& s) {
    return std::make_unique<CrcStackMod>(s, params);
  };
  r.add(std::move(crc));

  ModuleSpec ipv4;
  ipv4.kind = "ipv4";
  ipv4.provides = "packet";
  ipv4.connectors = {"packet"};
  ipv4.scope = stack::Scope::Instance;
  ipv4.make = [](const ModuleSpec& s) { return std::make_unique<IPv4Mod>(s); };
  r.add(std::move(ipv4));

  ModuleSpec eth;
  eth.kind = "ethernet";
  eth.provides = "packet";
  eth.sensors = {"phy_bytes", "phy_frames"};
  eth.fixed = true;
  eth.scope = stack::Scope::Kind;
  eth.make = [](const ModuleSpec& s) {
    return std::make_unique<EthernetMod>(s);
  };
  r.add(std::move(eth));

  return r;
}

stack::GenomeLayout build_layout(const stack::ModuleRegistry& registry,
                                 const StackParams& params) {
  const bool e0 = params.crc.evolve_e0;
  const bool kf = params.crc.evolve_k_F;
  return stack::GenomeLayout::build(
      registry, [e0, kf](const std::string& kind, const std::string& ctl) {
        if (kind == "crc" && ctl == "e0") return e0;
        if (kind == "crc" && ctl == "k_F") return kf;
        return true;
      });
}

// --- applications ---------------------------------------------------------

SourceApp::SourceApp(sim::Calendar& cal, Rng rng, SourceProfile profile,
                     PubSubMod* head, bool deterministic)
    : profile_(profile), head_(head) {
  const double period = profile_.on_len + profile_.off_len;
  const double burst_rate =
      profile_.mean_rate * period / profile_.on_len / profile_.payload;
  for (int f = 0; f < profile_.flows; ++f) {
    flows_.push_back(std::make_unique<sim::ArrivalProcess>(
        cal, rng.derive(static_cast<std::uint64_t>(f)),
        chem::on_off_rate(burst_rate, profile_.on_len, profile_.off_len,
                          f * profile_.phase_step),
        [this, f](double t) { emit(f, t); }, deterministic));
  }
}

void SourceApp::start(double from) {
  for (auto& f : flows_) f->start(from);
}

void SourceApp::emit(int flow, double t) {
  Packet p;
  p.id = next_id_++;
  p.flow = flow;
  p.payload_len = profile_.payload;
  p.created = t;
  submitted_payload_ += static_cast<std::uint64_t>(p.payload_len);
  ++submitted_packets_;
  head_->submit(std::move(p), t);
}

void SourceApp::note_ack(const Packet&, double) { ++acks_seen_; }

SinkApp::SinkApp(PubSubMod* head, int flows, int ack_payload)
    : head_(head), flows_(flows), ack_payload_(ack_payload) {}

void SinkApp::deliver(Packet&& p, double t) {
  if (p.is_ack) return;  // not expected at the sink side
  // Attribution uses only what the headers say: a transport port when one
  // was present, the default flow otherwise.
  const int attributed = p.udp_port >= 0 ? p.udp_port : 0;
  delivered_payload_ += static_cast<std::uint64_t>(p.payload_len);
  ++delivered_packets_;
  if (attributed == p.flow && attributed < flows_)
    attributed_payload_ += static_cast<std::uint64_t>(p.payload_len);
  else
    ++misattributed_;
  delay_sum_ += t - p.created;

  Packet ack;
  ack.id = next_ack_id_++;
  ack.flow = attributed;
  ack.is_ack = true;
  ack.payload_len = ack_payload_;
  ack.created = t;
  head_->submit(std::move(ack), t);
}

}  // namespace chemstack::proto
